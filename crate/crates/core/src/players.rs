//! Sets of players as bit masks.

use std::fmt;

/// Player identifier, numbered from 1.
pub type Player = usize;

/// Largest supported player count.
pub const MAX_PLAYERS: usize = 63;

/// A subset of `{1..n}` stored as a bit mask (bit `i` is player `i`).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlayerSet(u64);

impl PlayerSet {
    pub const EMPTY: PlayerSet = PlayerSet(0);

    pub fn all(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS, "at most {MAX_PLAYERS} players");
        PlayerSet(((1u64 << n) - 1) << 1)
    }

    pub fn singleton(i: Player) -> Self {
        let mut s = Self::EMPTY;
        s.insert(i);
        s
    }

    pub fn from_bits(bits: u64) -> Self {
        PlayerSet(bits & !1)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: Player) -> bool {
        (1..=MAX_PLAYERS).contains(&i) && self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, i: Player) {
        assert!((1..=MAX_PLAYERS).contains(&i), "player {i} out of range");
        self.0 |= 1 << i;
    }

    pub fn remove(&mut self, i: Player) {
        if (1..=MAX_PLAYERS).contains(&i) {
            self.0 &= !(1 << i);
        }
    }

    pub fn with(mut self, i: Player) -> Self {
        self.insert(i);
        self
    }

    pub fn union(self, other: Self) -> Self {
        PlayerSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        PlayerSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        PlayerSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = Player> {
        (1..=MAX_PLAYERS).filter(move |&i| self.0 & (1 << i) != 0)
    }
}

impl FromIterator<Player> for PlayerSet {
    fn from_iter<T: IntoIterator<Item = Player>>(iter: T) -> Self {
        let mut s = PlayerSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for PlayerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PlayerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_set_algebra() {
        let a: PlayerSet = [1, 3].into_iter().collect();
        let b = PlayerSet::singleton(3);
        assert!(b.is_subset(a));
        assert!(!a.is_subset(b));
        assert_eq!(a.difference(b), PlayerSet::singleton(1));
        assert_eq!(a.len(), 2);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(PlayerSet::all(2), [1, 2].into_iter().collect());
        assert_eq!(a.to_string(), "{1,3}");
    }
}
