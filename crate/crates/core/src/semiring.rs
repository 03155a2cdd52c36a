//! Semirings for distance products.
//!
//! Three structures are used throughout: the min-plus (tropical) semiring on
//! saturating integer weights, the augmented min-plus semiring on
//! (weight, hop-count) pairs ordered lexicographically, and the Boolean
//! semiring. The first two have idempotent addition given by a total order,
//! which is what the filtered multiplication requires.

use std::cmp::Ordering;
use std::fmt;

use crate::sim::Word;

/// Infinite weight sentinel; arithmetic saturates here.
pub const INF: u64 = u64::MAX;

pub fn saturating_add(a: u64, b: u64) -> u64 {
    if a == INF || b == INF {
        INF
    } else {
        a.checked_add(b).expect("weight overflow below INF")
    }
}

/// Element of the augmented min-plus semiring: path weight plus hop count.
/// `w == INF` iff `t == INF`; zero is `(INF, INF)`, one is `(0, 0)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AugWeight {
    pub w: u64,
    pub t: u64,
}

impl AugWeight {
    pub const ZERO: AugWeight = AugWeight { w: INF, t: INF };
    pub const ONE: AugWeight = AugWeight { w: 0, t: 0 };

    pub fn new(w: u64, t: u64) -> Self {
        let aw = AugWeight { w, t };
        debug_assert!((w == INF) == (t == INF), "w is infinite iff t is");
        aw
    }

    pub fn edge(w: u64) -> Self {
        AugWeight { w, t: 1 }
    }

    pub fn is_infinite(&self) -> bool {
        self.w == INF
    }
}

impl fmt::Debug for AugWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "(inf,inf)")
        } else {
            write!(f, "({},{})", self.w, self.t)
        }
    }
}

/// A semiring whose elements fit in at most two machine words on the wire.
/// `add` is the semiring addition (min for the distance semirings), `mul`
/// the multiplication (componentwise +).
pub trait Semiring: 'static {
    type Elem: Clone + PartialEq + Eq + fmt::Debug + Ord + Send + Sync;
    const NAME: &'static str;

    fn zero() -> Self::Elem;
    fn one() -> Self::Elem;
    fn add(a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    fn is_zero(e: &Self::Elem) -> bool {
        *e == Self::zero()
    }

    /// Wire encoding: the value must round-trip through two words.
    fn encode(e: &Self::Elem) -> [Word; 2];
    fn decode(words: [Word; 2]) -> Self::Elem;
}

/// Semirings where addition is min under a total order, as required for
/// filtered multiplication. The order is exposed both as a comparator and as
/// a two-level integer key (primary, secondary) for the coordinated binary
/// searches: min-plus uses only the primary (the weight), the augmented
/// semiring resolves weight ties through the secondary (the hop count).
pub trait OrderedSemiring: Semiring {
    fn cmp_elems(a: &Self::Elem, b: &Self::Elem) -> Ordering;

    fn primary(e: &Self::Elem) -> u64;
    fn secondary(e: &Self::Elem) -> u64;
    /// Largest secondary value an element can carry (0 when unused).
    fn secondary_cap(n: usize) -> u64;
}

/// Plain min-plus semiring on saturating integer weights.
pub struct MinPlus;

impl Semiring for MinPlus {
    type Elem = u64;
    const NAME: &'static str = "min-plus";

    fn zero() -> u64 {
        INF
    }
    fn one() -> u64 {
        0
    }
    fn add(a: &u64, b: &u64) -> u64 {
        *a.min(b)
    }
    fn mul(a: &u64, b: &u64) -> u64 {
        saturating_add(*a, *b)
    }
    fn encode(e: &u64) -> [Word; 2] {
        [*e, 0]
    }
    fn decode(words: [Word; 2]) -> u64 {
        words[0]
    }
}

impl OrderedSemiring for MinPlus {
    fn cmp_elems(a: &u64, b: &u64) -> Ordering {
        a.cmp(b)
    }
    fn primary(e: &u64) -> u64 {
        *e
    }
    fn secondary(_e: &u64) -> u64 {
        0
    }
    fn secondary_cap(_n: usize) -> u64 {
        0
    }
}

/// Augmented min-plus semiring: addition is min under the lexicographic
/// order on (weight, hops), multiplication adds componentwise.
pub struct AugMinPlus;

impl Semiring for AugMinPlus {
    type Elem = AugWeight;
    const NAME: &'static str = "augmented";

    fn zero() -> AugWeight {
        AugWeight::ZERO
    }
    fn one() -> AugWeight {
        AugWeight::ONE
    }
    fn add(a: &AugWeight, b: &AugWeight) -> AugWeight {
        if (a.w, a.t) <= (b.w, b.t) {
            *a
        } else {
            *b
        }
    }
    fn mul(a: &AugWeight, b: &AugWeight) -> AugWeight {
        if a.is_infinite() || b.is_infinite() {
            AugWeight::ZERO
        } else {
            AugWeight {
                w: saturating_add(a.w, b.w),
                t: saturating_add(a.t, b.t),
            }
        }
    }
    fn encode(e: &AugWeight) -> [Word; 2] {
        [e.w, e.t]
    }
    fn decode(words: [Word; 2]) -> AugWeight {
        AugWeight {
            w: words[0],
            t: words[1],
        }
    }
}

impl OrderedSemiring for AugMinPlus {
    fn cmp_elems(a: &AugWeight, b: &AugWeight) -> Ordering {
        (a.w, a.t).cmp(&(b.w, b.t))
    }
    fn primary(e: &AugWeight) -> u64 {
        e.w
    }
    fn secondary(e: &AugWeight) -> u64 {
        e.t
    }
    fn secondary_cap(n: usize) -> u64 {
        n as u64
    }
}

/// Boolean semiring; used by the oracle to define cancellations-free output
/// density and by the exactness tests.
pub struct Boolean;

impl Semiring for Boolean {
    type Elem = bool;
    const NAME: &'static str = "boolean";

    fn zero() -> bool {
        false
    }
    fn one() -> bool {
        true
    }
    fn add(a: &bool, b: &bool) -> bool {
        *a || *b
    }
    fn mul(a: &bool, b: &bool) -> bool {
        *a && *b
    }
    fn encode(e: &bool) -> [Word; 2] {
        [u64::from(*e), 0]
    }
    fn decode(words: [Word; 2]) -> bool {
        words[0] != 0
    }
}

/// Combine two (value, witness) pairs: the smaller value wins, ties keep the
/// smaller witness. This is the canonical tie-break used everywhere a set of
/// equal elements must reduce to one representative.
pub fn combine_with_witness<S: Semiring>(
    a: (S::Elem, usize),
    b: (S::Elem, usize),
) -> (S::Elem, usize) {
    let sum = S::add(&a.0, &b.0);
    if sum == a.0 && sum == b.0 {
        (sum, a.1.min(b.1))
    } else if sum == a.0 {
        a
    } else {
        b
    }
}
