//! Exact upper and lower Buck density on eventually periodic sets, staged
//! sandwich evaluation, and modulus-cover upper-bound certificates.
//!
//! On the eventually periodic class the upper and lower Buck densities
//! coincide with the asymptotic density `|residues| / modulus`; finite
//! perturbations never change the value. Sets that are not eventually
//! periodic are never assigned a density directly: they are certified
//! through sandwiches ([`StagedSet`]) or residue covers
//! ([`modulus_cover_bound`]), which is sufficient because every upper
//! quasi-density is squeezed between the lower and upper Buck densities.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::Rational;
use crate::periodic::EventuallyPeriodicSet;
use crate::{Error, Result};

fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Upper Buck density of an eventually periodic set: `|residues| / modulus`
/// of the canonical form. Exceptions are invisible to the value.
pub fn buck_upper(set: &EventuallyPeriodicSet) -> Rational {
    ratio(set.residues().len() as u64, set.modulus())
}

/// Lower Buck density. Coincides with [`buck_upper`] on this class, so every
/// eventually periodic set lies in the density's domain.
pub fn buck_lower(set: &EventuallyPeriodicSet) -> Rational {
    buck_upper(set)
}

/// One checked axiom instance.
#[derive(Clone, Debug)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub detail: String,
    pub lhs: Rational,
    pub rhs: Rational,
    pub pass: bool,
}

impl fmt::Display for AxiomCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "pass" } else { "FAIL" };
        write!(f, "[{status}] {}: {} ({} vs {})", self.name, self.detail, self.lhs, self.rhs)
    }
}

/// Report from [`check_axioms`]: one entry per verified instance.
#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Asserts instances of the upper-density axioms on the given arguments:
/// normalization, monotonicity, subadditivity, and the affine scaling law.
/// Failures are report entries, not errors.
pub fn check_axioms(
    s1: &EventuallyPeriodicSet,
    s2: &EventuallyPeriodicSet,
    k: u64,
    h: u64,
) -> AxiomReport {
    assert!(k >= 1, "k must be positive");
    let mut checks = Vec::new();
    let b1 = buck_upper(s1);
    let b2 = buck_upper(s2);

    let full = buck_upper(&EventuallyPeriodicSet::naturals());
    checks.push(AxiomCheck {
        name: "F1",
        detail: format!("b({s1}) <= b(N) = 1"),
        pass: b1 <= Rational::one() && full.is_one(),
        lhs: b1.clone(),
        rhs: full,
    });

    let inter = s1.intersect(s2);
    let bi = buck_upper(&inter);
    checks.push(AxiomCheck {
        name: "F2",
        detail: format!("monotone on ({s1}) ∩ ({s2}) ⊆ ({s1})"),
        pass: bi <= b1,
        lhs: bi,
        rhs: b1.clone(),
    });
    let uni = s1.union(s2);
    let bu = buck_upper(&uni);
    checks.push(AxiomCheck {
        name: "F2",
        detail: format!("monotone on ({s1}) ⊆ ({s1}) ∪ ({s2})"),
        pass: b1 <= bu,
        lhs: b1.clone(),
        rhs: bu.clone(),
    });

    let sum = &b1 + &b2;
    checks.push(AxiomCheck {
        name: "F3",
        detail: format!("b(union) <= b({s1}) + b({s2})"),
        pass: bu <= sum,
        lhs: bu,
        rhs: sum,
    });

    let scaled = s1.affine(k, h);
    let bs = buck_upper(&scaled);
    let expected = &b1 / Rational::from(BigInt::from(k));
    checks.push(AxiomCheck {
        name: "F4",
        detail: format!("b({k}*({s1}) + {h}) = b({s1}) / {k}"),
        pass: bs == expected,
        lhs: bs,
        rhs: expected,
    });

    AxiomReport { checks }
}

/// Checks disjoint additivity: with `x ⊆ a`, `y ⊆ b`, `a ∩ b = ∅`, and the
/// covers exception-free (so they are finite unions of progressions), the
/// upper and lower Buck densities of `x ∪ y` split additively.
///
/// Returns `(upper, lower)` of the union. Cover violations are errors.
pub fn additivity_disjoint(
    x: &EventuallyPeriodicSet,
    y: &EventuallyPeriodicSet,
    a: &EventuallyPeriodicSet,
    b: &EventuallyPeriodicSet,
) -> Result<(Rational, Rational)> {
    if !a.exceptions().is_empty() || !b.exceptions().is_empty() {
        return Err(Error::Precondition(
            "covers must have empty exceptional parts (finite unions of progressions)".into(),
        ));
    }
    if !x.is_subset_of(a) {
        return Err(Error::Precondition(format!("({x}) is not a subset of its cover ({a})")));
    }
    if !y.is_subset_of(b) {
        return Err(Error::Precondition(format!("({y}) is not a subset of its cover ({b})")));
    }
    if !a.intersect(b).is_empty() {
        return Err(Error::Precondition(format!("covers ({a}) and ({b}) are not disjoint")));
    }
    let union = x.union(y);
    let upper = buck_upper(&union);
    let lower = buck_lower(&union);
    let upper_sum = buck_upper(x) + buck_upper(y);
    let lower_sum = buck_lower(x) + buck_lower(y);
    assert!(
        upper == upper_sum && lower == lower_sum,
        "disjoint additivity failed: union {union} has ({upper}, {lower}), parts sum to ({upper_sum}, {lower_sum})"
    );
    Ok((upper, lower))
}

/// One stage of a staged sandwich.
#[derive(Clone, Debug)]
pub struct Stage {
    pub inner: EventuallyPeriodicSet,
    pub outer: EventuallyPeriodicSet,
    /// Certified bound on `buck(outer) - buck(inner)` at this stage.
    pub error: Rational,
}

type StageProducer = dyn Fn(u32) -> Result<Stage> + Send + Sync;

/// A stage-indexed sandwich `inner_i ⊆ A ⊆ outer_i` of eventually periodic
/// sets with a certified, shrinking error bound. Stages are memoized; the
/// containment chain between consecutive stages is verified on access, by
/// set-difference emptiness, and a violation aborts (it is a construction
/// bug, not an input condition).
pub struct StagedSet {
    producer: Box<StageProducer>,
    stages: Mutex<Vec<Arc<Stage>>>,
    intervals: Mutex<HashMap<(u32, u32), (Rational, Rational)>>,
}

impl fmt::Debug for StagedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cached = self.stages.lock().expect("stage cache poisoned").len();
        write!(f, "StagedSet(<{cached} cached stages>)")
    }
}

impl StagedSet {
    /// Wraps a stage producer; `produce(i)` is called with `i >= 1`.
    pub fn new(produce: impl Fn(u32) -> Result<Stage> + Send + Sync + 'static) -> Self {
        StagedSet {
            producer: Box::new(produce),
            stages: Mutex::new(Vec::new()),
            intervals: Mutex::new(HashMap::new()),
        }
    }

    /// A degenerate sandwich: every stage is `(set, set, 0)`.
    pub fn constant(set: EventuallyPeriodicSet) -> Self {
        Self::new(move |_| {
            Ok(Stage {
                inner: set.clone(),
                outer: set.clone(),
                error: Rational::zero(),
            })
        })
    }

    /// The stage with 1-based index `i`, verifying sandwich invariants
    /// against the previous stage.
    pub fn stage(&self, i: u32) -> Result<Arc<Stage>> {
        assert!(i >= 1, "stages are 1-based");
        let mut stages = self.stages.lock().expect("stage cache poisoned");
        while stages.len() < i as usize {
            let next_index = stages.len() as u32 + 1;
            let stage = (self.producer)(next_index)?;
            assert!(
                stage.inner.is_subset_of(&stage.outer),
                "stage {next_index}: inner is not contained in outer"
            );
            let width = buck_upper(&stage.outer) - buck_upper(&stage.inner);
            assert!(
                width <= stage.error,
                "stage {next_index}: density gap {width} exceeds certified error {}",
                stage.error
            );
            if let Some(prev) = stages.last() {
                assert!(
                    prev.inner.is_subset_of(&stage.inner),
                    "stage {next_index}: inner sets are not increasing"
                );
                assert!(
                    stage.outer.is_subset_of(&prev.outer),
                    "stage {next_index}: outer sets are not decreasing"
                );
            }
            stages.push(Arc::new(stage));
        }
        Ok(Arc::clone(&stages[i as usize - 1]))
    }

    /// Exact density interval of the k-fold sumset at stage `i`:
    /// `[buck(k·inner_i), buck(k·outer_i)]`. Intervals are memoized and the
    /// nesting of consecutive stages is asserted.
    pub fn density_interval(&self, i: u32, k: u32) -> Result<(Rational, Rational)> {
        assert!(i >= 1 && k >= 1);
        {
            let memo = self.intervals.lock().expect("interval cache poisoned");
            if let Some(v) = memo.get(&(i, k)) {
                return Ok(v.clone());
            }
        }
        let stage = self.stage(i)?;
        let lo = buck_upper(&stage.inner.k_fold_sumset(k)?);
        let hi = buck_upper(&stage.outer.k_fold_sumset(k)?);
        assert!(lo <= hi, "stage {i}, k={k}: interval is inverted ({lo} > {hi})");
        let mut memo = self.intervals.lock().expect("interval cache poisoned");
        if let Some(prev) = memo.get(&(i - 1, k)) {
            assert!(
                prev.0 <= lo && hi <= prev.1,
                "stage {i}, k={k}: interval [{lo}, {hi}] is not nested in [{}, {}]",
                prev.0,
                prev.1
            );
        }
        memo.insert((i, k), (lo.clone(), hi.clone()));
        Ok((lo, hi))
    }
}

/// Density interval of the k-fold sumset of a staged set at stage `i`,
/// asserting the nesting chain across all stages up to `i`.
pub fn staged_density_interval(
    staged: &StagedSet,
    i: u32,
    k: u32,
) -> Result<(Rational, Rational)> {
    assert!(i >= 1, "stages are 1-based");
    for j in 1..=i {
        staged.density_interval(j, k)?;
    }
    staged.density_interval(i, k)
}

/// Upper bound `|attained residues| / m` for the upper Buck density of a set
/// whose membership is residue-determined mod `m`. The predicate answers
/// "is residue r attained".
pub fn modulus_cover_bound(attained: impl Fn(u64) -> bool, m: u64) -> Rational {
    assert!(m >= 1, "modulus must be positive");
    let count = (0..m).filter(|&r| attained(r)).count() as u64;
    ratio(count, m)
}

/// Residues mod `m` attained by sums of two squares; sums of two squares are
/// residue-determined mod every m, so these give valid cover bounds.
pub fn two_squares_residues(m: u64) -> Vec<u64> {
    assert!(m >= 1);
    let mut squares: Vec<u64> = (0..m).map(|x| x * x % m).collect();
    squares.sort_unstable();
    squares.dedup();
    let mut attained = vec![false; m as usize];
    for &a in &squares {
        for &b in &squares {
            attained[((a + b) % m) as usize] = true;
        }
    }
    (0..m).filter(|&r| attained[r as usize]).collect()
}
