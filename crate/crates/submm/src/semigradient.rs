//! Modular bounds on a submodular function, tight at a chosen anchor set.
//!
//! Lower bounds come from permutation chains: visiting elements in some order
//! and recording marginal gains yields a modular function that never exceeds
//! `f` and agrees with it on every chain prefix. Upper bounds come from three
//! marginal-gain substitutions (grow, shrink, and their combination), each
//! tight at the anchor. Both directions produce a [`ModularBound`], the
//! object the optimizers actually minimize or maximize per round.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::modular::ModularVector;
use crate::oracle::Oracle;
use crate::set::SubsetMask;

/// Visit order over the ground set. The first `anchor_len` positions form the
/// anchor block; bounds built from the chain are tight on that prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
    anchor_len: usize,
}

impl Permutation {
    pub fn new(order: Vec<usize>, anchor_len: usize) -> Result<Self> {
        let n = order.len();
        if anchor_len > n {
            return Err(Error::invalid("anchor block longer than the permutation"));
        }
        let mut seen = vec![false; n];
        for &j in &order {
            if j >= n || seen[j] {
                return Err(Error::invalid("order must be a permutation of 0..n"));
            }
            seen[j] = true;
        }
        Ok(Permutation { order, anchor_len })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            order: (0..n).collect(),
            anchor_len: 0,
        }
    }

    /// Members of `y` in ascending id order, then non-members ascending; the
    /// anchor block is exactly `y`.
    pub fn anchored_identity(y: &SubsetMask) -> Self {
        let mut order: Vec<usize> = y.iter().collect();
        order.extend((0..y.n()).filter(|&j| !y.contains(j)));
        Permutation {
            order,
            anchor_len: y.len(),
        }
    }

    /// Random order within the anchor block and within the suffix, anchor
    /// block still exactly `y`.
    pub fn anchored_random(y: &SubsetMask, rng: &mut impl Rng) -> Self {
        let mut head: Vec<usize> = y.iter().collect();
        let mut tail: Vec<usize> = (0..y.n()).filter(|&j| !y.contains(j)).collect();
        head.shuffle(rng);
        tail.shuffle(rng);
        let anchor_len = head.len();
        head.extend(tail);
        Permutation {
            order: head,
            anchor_len,
        }
    }

    /// Uniformly random order with an empty anchor block.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Permutation {
            order,
            anchor_len: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn anchor_len(&self) -> usize {
        self.anchor_len
    }

    /// Set of the first `len` visited elements.
    pub fn prefix(&self, len: usize) -> SubsetMask {
        let mut mask = SubsetMask::empty(self.n());
        for &j in &self.order[..len.min(self.n())] {
            mask.insert(j);
        }
        mask
    }

    pub fn anchor_set(&self) -> SubsetMask {
        self.prefix(self.anchor_len)
    }

    pub fn is_anchored_at(&self, y: &SubsetMask) -> bool {
        self.anchor_len == y.len() && self.anchor_set() == *y
    }
}

/// Which side of `f` a [`ModularBound`] sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Modular surrogate `x -> f(anchor) + w(x) - w(anchor)`, tight at the anchor
/// and dominating (or dominated by) `f` everywhere else.
#[derive(Debug, Clone)]
pub struct ModularBound {
    side: BoundSide,
    anchor: SubsetMask,
    anchor_value: f64,
    values: ModularVector,
    values_at_anchor: f64,
}

impl ModularBound {
    pub fn new(
        side: BoundSide,
        anchor: SubsetMask,
        anchor_value: f64,
        values: ModularVector,
    ) -> Self {
        let values_at_anchor = values.eval(&anchor);
        ModularBound {
            side,
            anchor,
            anchor_value,
            values,
            values_at_anchor,
        }
    }

    pub fn eval(&self, x: &SubsetMask) -> f64 {
        self.anchor_value + self.values.eval(x) - self.values_at_anchor
    }

    pub fn side(&self) -> BoundSide {
        self.side
    }

    pub fn anchor(&self) -> &SubsetMask {
        &self.anchor
    }

    pub fn anchor_value(&self) -> f64 {
        self.anchor_value
    }

    /// Per-element weights of the surrogate.
    pub fn values(&self) -> &ModularVector {
        &self.values
    }
}

/// Chain-derived lower linearization of `f`.
#[derive(Debug, Clone)]
pub struct Subgradient {
    permutation: Permutation,
    values: ModularVector,
    prefix_values: Vec<f64>,
}

impl Subgradient {
    /// Walk the chain `S_0 = {} , S_i = S_{i-1} + order[i]`, recording
    /// `f(S_i)`; entry `order[i]` gets the marginal `f(S_i) - f(S_{i-1})`.
    /// Costs exactly `n + 1` oracle calls.
    pub fn from_permutation(f: &Oracle, permutation: Permutation) -> Result<Self> {
        if permutation.n() != f.n() {
            return Err(Error::invalid("permutation size must match the oracle"));
        }
        let n = f.n();
        let mut cur = SubsetMask::empty(n);
        let mut prefix_values = Vec::with_capacity(n + 1);
        prefix_values.push(f.eval(&cur));
        let mut values = ModularVector::zeros(n);
        for &j in permutation.order() {
            cur.insert(j);
            let v = f.eval(&cur);
            values.set(j, v - prefix_values[prefix_values.len() - 1]);
            prefix_values.push(v);
        }
        Ok(Subgradient {
            permutation,
            values,
            prefix_values,
        })
    }

    pub fn values(&self) -> &ModularVector {
        &self.values
    }

    /// `f` on the chain prefixes, `prefix_values[i] = f(S_i)`.
    pub fn prefix_values(&self) -> &[f64] {
        &self.prefix_values
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn anchor_value(&self) -> f64 {
        self.prefix_values[self.permutation.anchor_len()]
    }

    /// Lower bound tight at the anchor block.
    pub fn bound(&self) -> ModularBound {
        ModularBound::new(
            BoundSide::Lower,
            self.permutation.anchor_set(),
            self.anchor_value(),
            self.values.clone(),
        )
    }
}

/// Flavor of modular upper bound. They differ in which marginal stands in
/// for each element: members are charged their removal gain from the anchor
/// (`Shrink`) or from the full set (`Grow`, `Bar`); non-members their gain on
/// top of the anchor (`Grow`) or of the empty set (`Shrink`, `Bar`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupergradientKind {
    Grow,
    Shrink,
    Bar,
}

impl SupergradientKind {
    pub const ALL: [SupergradientKind; 3] = [
        SupergradientKind::Grow,
        SupergradientKind::Shrink,
        SupergradientKind::Bar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SupergradientKind::Grow => "grow",
            SupergradientKind::Shrink => "shrink",
            SupergradientKind::Bar => "bar",
        }
    }
}

/// Upper bound on `f` tight at `y`. Costs about `n + 2` oracle calls.
pub fn supergradient(f: &Oracle, y: &SubsetMask, kind: SupergradientKind) -> Result<ModularBound> {
    if y.n() != f.n() {
        return Err(Error::invalid("anchor size must match the oracle"));
    }
    let n = f.n();
    let ground = f.ground();
    let full = ground.full();
    let f_y = f.eval(y);
    let f_full = match kind {
        SupergradientKind::Shrink => 0.0,
        _ => f.eval(&full),
    };
    let mut values = ModularVector::zeros(n);
    for j in 0..n {
        let w = if y.contains(j) {
            match kind {
                SupergradientKind::Grow | SupergradientKind::Bar => {
                    f_full - f.eval(&full.without(j))
                }
                SupergradientKind::Shrink => f_y - f.eval(&y.without(j)),
            }
        } else {
            match kind {
                SupergradientKind::Grow => f.eval(&y.with(j)) - f_y,
                SupergradientKind::Shrink | SupergradientKind::Bar => f.eval(&ground.singleton(j)),
            }
        };
        values.set(j, w);
    }
    Ok(ModularBound::new(BoundSide::Upper, y.clone(), f_y, values))
}
