//! Control maps, communication rules, and their JSON forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Mdp;

/// Actuator control `π_A(s, k)`, indexed `[last_observed][elapsed]` for
/// `elapsed ∈ [0, t_max]`. Lookups past the end clamp to the last entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlMap(pub Vec<Vec<usize>>);

impl ControlMap {
    pub fn constant(num_states: usize, t_max: usize, action: usize) -> Self {
        Self(vec![vec![action; t_max + 1]; num_states])
    }

    #[inline]
    pub fn row(&self, state: usize) -> &[usize] {
        &self.0[state]
    }

    #[inline]
    pub fn action(&self, state: usize, elapsed: usize) -> usize {
        crate::belief::action_at(&self.0[state], elapsed)
    }

    pub fn num_states(&self) -> usize {
        self.0.len()
    }

    pub fn validate(&self, m: &Mdp) -> Result<()> {
        if self.0.len() != m.num_states() {
            return Err(Error::DimensionMismatch { expected: m.num_states(), actual: self.0.len() });
        }
        for (s, row) in self.0.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::Config(format!("control row for state {s} is empty")));
            }
            if let Some(&a) = row.iter().find(|&&a| a >= m.num_actions()) {
                return Err(Error::Config(format!("control for state {s} uses invalid action {a}")));
            }
        }
        Ok(())
    }
}

/// BS transmission predicate `π_B(s, k, s')`: last observed `s`, elapsed
/// `k` counted after the step, current state `s'`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransmitMap {
    num_states: usize,
    t_max: usize,
    bits: Vec<bool>,
}

impl TransmitMap {
    /// Every entry set to `value`, except the forced update at `t_max`.
    pub fn constant(num_states: usize, t_max: usize, value: bool) -> Self {
        let mut map = Self { num_states, t_max, bits: vec![value; num_states * (t_max + 1) * num_states] };
        map.force_cap();
        map
    }

    pub fn always(num_states: usize, t_max: usize) -> Self {
        Self::constant(num_states, t_max, true)
    }

    pub fn never(num_states: usize, t_max: usize) -> Self {
        Self::constant(num_states, t_max, false)
    }

    #[inline]
    fn idx(&self, last: usize, elapsed: usize, current: usize) -> usize {
        (last * (self.t_max + 1) + elapsed) * self.num_states + current
    }

    #[inline]
    pub fn get(&self, last: usize, elapsed: usize, current: usize) -> bool {
        elapsed >= self.t_max || self.bits[self.idx(last, elapsed, current)]
    }

    pub fn set(&mut self, last: usize, elapsed: usize, current: usize, value: bool) {
        let i = self.idx(last, elapsed, current);
        self.bits[i] = value || elapsed >= self.t_max;
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    fn force_cap(&mut self) {
        for s in 0..self.num_states {
            for c in 0..self.num_states {
                let i = self.idx(s, self.t_max, c);
                self.bits[i] = true;
            }
        }
    }

    /// Number of entries with `elapsed ∈ [1, t_max)` set to transmit.
    pub fn count_voluntary(&self) -> usize {
        let mut n = 0;
        for s in 0..self.num_states {
            for k in 1..self.t_max {
                for c in 0..self.num_states {
                    n += self.get(s, k, c) as usize;
                }
            }
        }
        n
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<u8>>> {
        (0..self.num_states)
            .map(|s| {
                (0..=self.t_max)
                    .map(|k| (0..self.num_states).map(|c| self.get(s, k, c) as u8).collect())
                    .collect()
            })
            .collect()
    }

    pub fn from_nested(nested: &[Vec<Vec<u8>>]) -> Result<Self> {
        let n = nested.len();
        let t_max = nested.first().map_or(0, |r| r.len().saturating_sub(1));
        if n == 0 || t_max == 0 {
            return Err(Error::Config("transmit map must cover at least one state and t_max >= 1".into()));
        }
        let mut map = Self::never(n, t_max);
        for (s, per_k) in nested.iter().enumerate() {
            if per_k.len() != t_max + 1 {
                return Err(Error::DimensionMismatch { expected: t_max + 1, actual: per_k.len() });
            }
            for (k, per_c) in per_k.iter().enumerate() {
                if per_c.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: per_c.len() });
                }
                for (c, &bit) in per_c.iter().enumerate() {
                    if bit > 1 {
                        return Err(Error::Config(format!("transmit entry ({s},{k},{c}) = {bit} is not 0/1")));
                    }
                    if k == t_max && bit == 0 {
                        return Err(Error::Config(format!(
                            "transmit entry ({s},{k},{c}) must be 1: updates are forced at t_max"
                        )));
                    }
                    map.set(s, k, c, bit == 1);
                }
            }
        }
        Ok(map)
    }
}

impl Serialize for TransmitMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TransmitMap {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let nested = Vec::<Vec<Vec<u8>>>::deserialize(deserializer)?;
        Self::from_nested(&nested).map_err(serde::de::Error::custom)
    }
}

/// Pull policy: control plus a per-state update period `Δ(s)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PullPolicy {
    pub control: ControlMap,
    pub periods: Vec<usize>,
}

impl PullPolicy {
    /// `δ_{s,k}`: whether an update follows the step taken at elapsed `k`.
    pub fn requests_after(&self, state: usize, elapsed: usize) -> bool {
        self.periods[state] == elapsed + 1
    }
}

/// Push policy: control plus the BS transmission predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushPolicy {
    pub control: ControlMap,
    pub transmit: TransmitMap,
}

/// State-independent schedule: updates at every time `t ≥ 1` with
/// `t ≡ phase (mod period)`; time 0 is an informed start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicSchedule {
    pub period: usize,
    pub phase: usize,
}

impl PeriodicSchedule {
    pub fn new(period: usize, phase: usize) -> Result<Self> {
        if period == 0 || phase >= period {
            return Err(Error::Config(format!("invalid periodic schedule: period {period}, phase {phase}")));
        }
        Ok(Self { period, phase })
    }

    /// Length of the first interval, from time 0 to the first update.
    pub fn first_interval(&self) -> usize {
        if self.phase == 0 {
            self.period
        } else {
            self.phase
        }
    }

    /// Whether an update happens at absolute time `t ≥ 1`.
    pub fn updates_at(&self, t: usize) -> bool {
        t >= 1 && t % self.period == self.phase % self.period
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicPolicy {
    pub schedule: PeriodicSchedule,
    pub control: ControlMap,
}

/// Any joint control/communication policy the evaluators understand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JointPolicy {
    Pull(PullPolicy),
    Push(PushPolicy),
    Periodic(PeriodicPolicy),
}

impl JointPolicy {
    pub fn control(&self) -> &ControlMap {
        match self {
            JointPolicy::Pull(p) => &p.control,
            JointPolicy::Push(p) => &p.control,
            JointPolicy::Periodic(p) => &p.control,
        }
    }

    /// Whether an update follows a step that brings elapsed time to `elapsed`
    /// (≥ 1) in a steady-state interval started at `last`, landing in `current`.
    pub fn transmits(&self, last: usize, elapsed: usize, current: usize, t_max: usize) -> bool {
        if elapsed >= t_max {
            return true;
        }
        match self {
            JointPolicy::Pull(p) => elapsed >= p.periods[last],
            JointPolicy::Push(p) => p.transmit.get(last, elapsed, current),
            JointPolicy::Periodic(p) => elapsed >= p.schedule.period,
        }
    }

    /// Checks dimensions and that every rule updates no later than `t_max`.
    pub fn validate(&self, m: &Mdp, t_max: usize) -> Result<()> {
        self.control().validate(m)?;
        match self {
            JointPolicy::Pull(p) => {
                if p.periods.len() != m.num_states() {
                    return Err(Error::DimensionMismatch { expected: m.num_states(), actual: p.periods.len() });
                }
                if let Some((s, &d)) = p.periods.iter().enumerate().find(|(_, &d)| d == 0 || d > t_max) {
                    return Err(Error::Config(format!("period {d} of state {s} outside [1, t_max={t_max}]")));
                }
            }
            JointPolicy::Push(p) => {
                if p.transmit.num_states() != m.num_states() {
                    return Err(Error::DimensionMismatch {
                        expected: m.num_states(),
                        actual: p.transmit.num_states(),
                    });
                }
                if p.transmit.t_max() != t_max {
                    return Err(Error::Config(format!(
                        "transmit map built for t_max={} but evaluation uses t_max={t_max}",
                        p.transmit.t_max()
                    )));
                }
            }
            JointPolicy::Periodic(p) => {
                if p.schedule.period > t_max || p.schedule.phase >= p.schedule.period {
                    return Err(Error::Config(format!(
                        "periodic schedule {:?} violates the t_max={t_max} bound",
                        p.schedule
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_is_always_forced() {
        let mut m = TransmitMap::never(3, 4);
        assert!(m.get(1, 4, 2));
        m.set(1, 4, 2, false);
        assert!(m.get(1, 4, 2));
        assert!(!m.get(1, 3, 2));
        assert_eq!(m.count_voluntary(), 0);
        assert_eq!(TransmitMap::always(3, 4).count_voluntary(), 3 * 3 * 3);
    }

    #[test]
    fn nested_form_rejects_missing_forced_update() {
        let mut nested = TransmitMap::never(2, 2).to_nested();
        nested[0][2][1] = 0;
        assert!(TransmitMap::from_nested(&nested).is_err());
    }

    #[test]
    fn push_policy_json_shape() {
        let p = PushPolicy { control: ControlMap::constant(2, 1, 0), transmit: TransmitMap::never(2, 1) };
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert_eq!(v["transmit"], serde_json::json!([[[0, 0], [1, 1]], [[0, 0], [1, 1]]]));
        assert_eq!(v["control"], serde_json::json!([[0, 0], [0, 0]]));
        let back: PushPolicy = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn pull_policy_json_shape() {
        let p = PullPolicy { control: ControlMap(vec![vec![1, 0], vec![0, 0]]), periods: vec![2, 1] };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"control":[[1,0],[0,0]],"periods":[2,1]}"#);
        assert!(p.requests_after(0, 1));
        assert!(!p.requests_after(0, 0));
    }

    #[test]
    fn periodic_phase() {
        let odd = PeriodicSchedule::new(2, 1).unwrap();
        assert_eq!(odd.first_interval(), 1);
        assert!(odd.updates_at(1) && odd.updates_at(3) && !odd.updates_at(2));
        let even = PeriodicSchedule::new(2, 0).unwrap();
        assert_eq!(even.first_interval(), 2);
        assert!(PeriodicSchedule::new(2, 2).is_err());
    }
}
