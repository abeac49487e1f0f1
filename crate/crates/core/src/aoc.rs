//! Area of Conflict: closed forms per decision model, a Monte Carlo
//! estimator over coefficient space, and the conflict region boundaries.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::sig;
use crate::game::{ModelKind, RewardMatrix, ValidatedMatrix};

/// Samples drawn from one RNG stream. Fixed so estimates do not depend on
/// how partitions are scheduled.
pub const MC_PARTITION: u64 = 1 << 14;

pub const MC_MIN_SAMPLES: u64 = 1_000;

/// `a = r211 - r121`, `b = r122 - r212`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapPair {
    pub a: f64,
    pub b: f64,
}

impl GapPair {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        check_gap("A", a)?;
        check_gap("B", b)?;
        Ok(GapPair { a, b })
    }

    pub fn swapped(self) -> Self {
        GapPair { a: self.b, b: self.a }
    }
}

fn check_gap(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveGap { name, value })
    }
}

pub fn gaps(m: &RewardMatrix) -> Result<GapPair> {
    let a = m.row_preferred().row - m.col_preferred().row;
    let b = m.col_preferred().col - m.row_preferred().col;
    GapPair::new(a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AocResult {
    pub value: f64,
    /// SVO only: the clamped angles `(p1, p2)` splitting the quadrants.
    pub breakdown: Option<(f64, f64)>,
}

pub fn aoc_analytical(kind: ModelKind, g: GapPair) -> Result<AocResult> {
    let GapPair { a, b } = g;
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("AoC needs positive gaps, got A = {a}, B = {b}")));
    }
    let value = match kind {
        ModelKind::Baseline => 1.0,
        ModelKind::PureAltruism => (a / b).min(b / a),
        ModelKind::Altruism => 2.0 * a * b / ((a + b) * (a + b)),
        // ln(A+B)(A/B + B/A) - (A/B ln A + B/A ln B) - 1, regrouped so the
        // logarithms do not cancel for lopsided gaps.
        ModelKind::AugmentedAltruism => (b / a) * (a / b).ln_1p() + (a / b) * (b / a).ln_1p() - 1.0,
        ModelKind::Svo => {
            let (p1, p2) = svo_split(g);
            let v = (p1 * p2 + (FRAC_PI_2 - p1) * (FRAC_PI_2 - p2)) / (FRAC_PI_2 * FRAC_PI_2);
            return Ok(AocResult {
                value: v.clamp(0.0, 1.0),
                breakdown: Some((p1, p2)),
            });
        }
    };
    Ok(AocResult {
        value: value.clamp(0.0, 1.0),
        breakdown: None,
    })
}

fn svo_split(g: GapPair) -> (f64, f64) {
    (
        (g.a / g.b).atan().clamp(0.0, FRAC_PI_2),
        (g.b / g.a).atan().clamp(0.0, FRAC_PI_2),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub kind: ModelKind,
    pub estimate: f64,
    pub standard_error: f64,
    pub n: u64,
    pub seed: u64,
    pub conflicts: u64,
}

/// Fraction of uniformly drawn coefficient pairs that end in conflict.
///
/// Coefficients are drawn from `[0, 1)^2` (`[0, pi/2)^2` for SVO) with
/// ChaCha8. Samples are split into partitions of [`MC_PARTITION`]; partition
/// `p` uses stream `p` of the generator seeded with `seed`, so the result is
/// identical for any thread count.
pub fn aoc_monte_carlo(kind: ModelKind, m: &ValidatedMatrix, n: u64, seed: u64) -> Result<McEstimate> {
    if n < MC_MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "Monte Carlo needs at least {MC_MIN_SAMPLES} samples, got {n}"
        )));
    }
    if kind == ModelKind::Baseline {
        return Ok(McEstimate {
            kind,
            estimate: 1.0,
            standard_error: 0.0,
            n,
            seed,
            conflicts: n,
        });
    }
    let span = kind.coefficient_span();
    let partitions = n.div_ceil(MC_PARTITION);
    let conflicts: u64 = (0..partitions)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p);
            let count = MC_PARTITION.min(n - p * MC_PARTITION);
            let mut hits = 0u64;
            for _ in 0..count {
                let c1 = span * rng.random::<f64>();
                let c2 = span * rng.random::<f64>();
                if crate::game::conflict_unchecked(&kind.with_coeffs(c1, c2), m) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = conflicts as f64 / n as f64;
    Ok(McEstimate {
        kind,
        estimate: p,
        standard_error: (p * (1.0 - p) / n as f64).sqrt(),
        n,
        seed,
        conflicts,
    })
}

/// Closed interval of second-agent coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionRow {
    pub alpha1: f64,
    pub intervals: Vec<Interval>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionBounds {
    pub kind: ModelKind,
    pub rows: Vec<RegionRow>,
}

impl RegionBounds {
    pub fn contains(&self, row: usize, alpha2: f64) -> bool {
        self.rows[row].intervals.iter().any(|iv| iv.contains(alpha2))
    }
}

/// For each first-agent coefficient, the second-agent coefficients that
/// produce conflict. SVO coefficients are angles in `[0, pi/2]`.
pub fn conflict_region_bounds(kind: ModelKind, g: GapPair, alpha1_samples: &[f64]) -> Result<RegionBounds> {
    let GapPair { a, b } = GapPair::new(g.a, g.b).map_err(|e| Error::Domain(e.to_string()))?;
    let span = kind.coefficient_span();
    let mut rows = Vec::with_capacity(alpha1_samples.len());
    for &alpha1 in alpha1_samples {
        if !(0.0..=span).contains(&alpha1) {
            return Err(Error::Domain(format!(
                "coefficient {alpha1} outside [0, {span}] for {kind}"
            )));
        }
        let intervals = match kind {
            ModelKind::Baseline => vec![Interval { lo: 0.0, hi: 1.0 }],
            ModelKind::PureAltruism => quadrants(alpha1, (a / b).min(1.0), (b / a).min(1.0), 1.0),
            ModelKind::Altruism => quadrants(alpha1, a / (a + b), b / (a + b), 1.0),
            ModelKind::Svo => {
                let (p1, p2) = svo_split(g);
                quadrants(alpha1, p1, p2, FRAC_PI_2)
            }
            ModelKind::AugmentedAltruism => {
                if alpha1 <= 0.0 || alpha1 >= 1.0 {
                    Vec::new()
                } else {
                    let lo = (1.0 - (1.0 - alpha1) / alpha1 * a / b).max(0.0);
                    let hi = (b / (b + (1.0 - alpha1) * a)).min(1.0);
                    nonempty(lo, hi)
                }
            }
        };
        rows.push(RegionRow { alpha1, intervals });
    }
    Ok(RegionBounds { kind, rows })
}

/// Both-aggressive below the thresholds, both-passive above.
fn quadrants(alpha1: f64, t1: f64, t2: f64, span: f64) -> Vec<Interval> {
    if alpha1 <= t1 {
        nonempty(0.0, t2.min(span))
    } else {
        nonempty(t2.max(0.0), span)
    }
}

fn nonempty(lo: f64, hi: f64) -> Vec<Interval> {
    if lo < hi {
        vec![Interval { lo, hi }]
    } else {
        Vec::new()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub kind: ModelKind,
    pub a: f64,
    pub b: f64,
    pub aoc: f64,
}

pub fn aoc_curve(kinds: &[ModelKind], a_values: &[f64], b: f64) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::with_capacity(kinds.len() * a_values.len());
    for &kind in kinds {
        for &a in a_values {
            let aoc = aoc_analytical(kind, GapPair { a, b })?.value;
            rows.push(CurveRow { kind, a, b, aoc });
        }
    }
    rows.sort_by(|x, y| x.kind.cmp(&y.kind).then(x.a.total_cmp(&y.a)));
    Ok(rows)
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], mut w: W) -> io::Result<()> {
    writeln!(w, "kind,A,B,aoc")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.kind, sig(r.a, 9), sig(r.b, 9), sig(r.aoc, 9))?;
    }
    Ok(())
}

/// One line per interval; a sample with no conflict interval gets empty
/// `lo,hi` columns.
pub fn write_regions_csv<W: Write>(bounds: &RegionBounds, mut w: W) -> io::Result<()> {
    writeln!(w, "kind,alpha1,lo,hi")?;
    for row in &bounds.rows {
        if row.intervals.is_empty() {
            writeln!(w, "{},{},,", bounds.kind, sig(row.alpha1, 9))?;
        }
        for iv in &row.intervals {
            writeln!(
                w,
                "{},{},{},{}",
                bounds.kind,
                sig(row.alpha1, 9),
                sig(iv.lo, 9),
                sig(iv.hi, 9)
            )?;
        }
    }
    Ok(())
}
