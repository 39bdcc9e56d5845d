use std::fmt;

/// Which self-consistency operator a [`ValueTable`] is a fixed point of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    /// Discounted return, `V = r + gamma * V(f)`.
    Reward,
    /// Discounted running minimum of `h`, `V = gamma_h * min(h, V(f))`.
    Safety,
}

/// A per-state value table.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub kind: ValueKind,
    pub values: Vec<f64>,
}

impl ValueTable {
    pub fn new(kind: ValueKind, values: Vec<f64>) -> Self {
        Self { kind, values }
    }

    pub fn zeros(kind: ValueKind, n_states: usize) -> Self {
        Self::new(kind, vec![0.0; n_states])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, state: usize) -> f64 {
        self.values[state]
    }

    /// `{x : V(x) >= 0}`, the CIS of a safety table.
    pub fn superlevel_set(&self) -> StateSet {
        StateSet::from_fn(self.values.len(), |x| self.values[x] >= 0.0)
    }

    /// `max_x |self(x) - other(x)|`.
    pub fn sup_distance(&self, other: &ValueTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `min_x (self(x) - before(x))`; non-negative when `self >= before` pointwise.
    pub fn min_change_from(&self, before: &ValueTable) -> f64 {
        self.values
            .iter()
            .zip(&before.values)
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for ValueTable {
    type Output = f64;

    fn index(&self, state: usize) -> &f64 {
        &self.values[state]
    }
}

/// A subset of states stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    n_states: usize,
    words: Vec<u64>,
}

impl StateSet {
    pub fn empty(n_states: usize) -> Self {
        Self {
            n_states,
            words: vec![0; n_states.div_ceil(64)],
        }
    }

    pub fn full(n_states: usize) -> Self {
        Self::from_fn(n_states, |_| true)
    }

    pub fn from_fn(n_states: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mut set = Self::empty(n_states);
        for x in 0..n_states {
            if pred(x) {
                set.insert(x);
            }
        }
        set
    }

    pub fn from_states(n_states: usize, states: &[usize]) -> Self {
        let mut set = Self::empty(n_states);
        for &x in states {
            set.insert(x);
        }
        set
    }

    pub fn universe(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn contains(&self, state: usize) -> bool {
        state < self.n_states && self.words[state / 64] >> (state % 64) & 1 == 1
    }

    pub fn insert(&mut self, state: usize) {
        assert!(state < self.n_states, "state {state} outside universe");
        self.words[state / 64] |= 1 << (state % 64);
    }

    pub fn remove(&mut self, state: usize) {
        if state < self.n_states {
            self.words[state / 64] &= !(1 << (state % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
            && self.words.len() <= other.words.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states).filter(move |&x| self.contains(x))
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
