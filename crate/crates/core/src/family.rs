//! Families of curves or characters, their averaged explicit formulas, the
//! zero-density histogram, jump detection on the black curve, and a spectral
//! structure metric.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::arith::{list_fundamental_discriminants, PrimeTable};
use crate::dirichlet::{build_odd_family, CharacterError, DirichletCharacter};
use crate::elliptic::EllipticCurve;
use crate::explicit::{
    zero_pair_term, zero_sum_truncated, DirichletFormula, EllipticFormula, FormulaError, Truncation, ZeroSet,
};
use crate::lfunc::{find_zeros, EvalAccuracy, LfuncError, ZeroList, ZeroSource};

/// Zero lists keyed by curve label or character id.
pub type ZeroMap = BTreeMap<String, ZeroList>;

pub const DEFAULT_GRID_POINTS: usize = 2000;
pub const DEFAULT_JUMP_WINDOW: f64 = 0.5;
const MIN_POINTS_PER_SIDE: usize = 3;
/// Relative bound on imaginary parts for series that should be real.
pub const REALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("family {0} has no members")]
    Empty(String),
    #[error("no zero data for {member}")]
    MissingZeros { member: String },
    #[error("zero data for {member} does not cover {request}")]
    Coverage { member: String, request: String },
    #[error("{member} is odd; R(x) is only defined for even characters")]
    Parity { member: String },
    #[error("family {0} is neither real nor closed under conjugation")]
    NotConjugationClosed(String),
    #[error("family {id} holds {found}, expected {expected}")]
    WrongKind {
        id: String,
        found: &'static str,
        expected: &'static str,
    },
    #[error("series is not real: {0}")]
    NotReal(String),
    #[error("candidate {candidate}: {left} grid points left and {right} right within the window; need {MIN_POINTS_PER_SIDE}")]
    Resolution { candidate: f64, left: usize, right: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid histogram request: {0}")]
    Histogram(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Lfunc(#[from] LfuncError),
    #[error(transparent)]
    Character(#[from] CharacterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    EllipticRank0,
    EllipticRank1,
    EllipticCustom,
    KroneckerRange,
    OddModPrime,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyKind::EllipticRank0 => "elliptic-rank0",
            FamilyKind::EllipticRank1 => "elliptic-rank1",
            FamilyKind::EllipticCustom => "elliptic-custom",
            FamilyKind::KroneckerRange => "kronecker-range",
            FamilyKind::OddModPrime => "odd-mod-prime",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Members {
    Curves(Vec<EllipticCurve>),
    Characters(Vec<DirichletCharacter>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub id: String,
    pub kind: FamilyKind,
    pub members: Members,
    /// Construction parameters, in insertion order.
    pub provenance: Vec<(String, String)>,
}

impl Family {
    /// Curves in the given order; fails when empty.
    pub fn from_curves(
        id: impl Into<String>,
        kind: FamilyKind,
        curves: Vec<EllipticCurve>,
    ) -> Result<Self, FamilyError> {
        let id = id.into();
        if curves.is_empty() {
            return Err(FamilyError::Empty(id));
        }
        Ok(Self {
            id,
            kind,
            members: Members::Curves(curves),
            provenance: Vec::new(),
        })
    }

    /// Characters in the given order; fails when empty.
    pub fn from_characters(
        id: impl Into<String>,
        kind: FamilyKind,
        characters: Vec<DirichletCharacter>,
    ) -> Result<Self, FamilyError> {
        let id = id.into();
        if characters.is_empty() {
            return Err(FamilyError::Empty(id));
        }
        Ok(Self {
            id,
            kind,
            members: Members::Characters(characters),
            provenance: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::Curves(c) => c.len(),
            Members::Characters(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn member_ids(&self) -> Vec<String> {
        match &self.members {
            Members::Curves(c) => c.iter().map(|e| e.label().to_string()).collect(),
            Members::Characters(c) => c.iter().map(|x| x.id()).collect(),
        }
    }

    pub fn curves(&self) -> Result<&[EllipticCurve], FamilyError> {
        match &self.members {
            Members::Curves(c) => Ok(c),
            Members::Characters(_) => Err(self.wrong_kind("characters", "curves")),
        }
    }

    pub fn characters(&self) -> Result<&[DirichletCharacter], FamilyError> {
        match &self.members {
            Members::Characters(c) => Ok(c),
            Members::Curves(_) => Err(self.wrong_kind("curves", "characters")),
        }
    }

    /// True when every member is real or has its conjugate in the family.
    pub fn is_conjugation_closed(&self) -> bool {
        match &self.members {
            Members::Curves(_) => true,
            Members::Characters(c) => {
                let ids: HashSet<String> = c.iter().map(|x| x.id()).collect();
                c.iter().all(|x| x.is_real() || ids.contains(&x.conjugate().id()))
            }
        }
    }

    fn wrong_kind(&self, found: &'static str, expected: &'static str) -> FamilyError {
        FamilyError::WrongKind {
            id: self.id.clone(),
            found,
            expected,
        }
    }

    fn with_provenance(mut self, entries: &[(&str, String)]) -> Self {
        self.provenance = entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        self
    }
}

/// Curves with conductor in `[lo, hi]` and the given rank, in corpus order.
pub fn build_elliptic_family(curves: &[EllipticCurve], lo: u64, hi: u64, rank: u32) -> Result<Family, FamilyError> {
    let kind = match rank {
        0 => FamilyKind::EllipticRank0,
        1 => FamilyKind::EllipticRank1,
        _ => FamilyKind::EllipticCustom,
    };
    let members: Vec<EllipticCurve> = curves
        .iter()
        .filter(|e| (lo..=hi).contains(&e.conductor()) && e.rank() == rank)
        .cloned()
        .collect();
    let id = format!("ec-N{lo}-{hi}-r{rank}");
    Ok(Family::from_curves(id, kind, members)?.with_provenance(&[
        ("conductor_lo", lo.to_string()),
        ("conductor_hi", hi.to_string()),
        ("rank", rank.to_string()),
    ]))
}

/// One Kronecker character per fundamental discriminant in `[lo, hi]`.
pub fn build_kronecker_family(lo: i64, hi: i64) -> Result<Family, FamilyError> {
    let members = list_fundamental_discriminants(lo, hi)
        .into_iter()
        .map(DirichletCharacter::kronecker)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(
        Family::from_characters(format!("kron-D{lo}-{hi}"), FamilyKind::KroneckerRange, members)?
            .with_provenance(&[("discriminant_lo", lo.to_string()), ("discriminant_hi", hi.to_string())]),
    )
}

/// The `count` smallest fundamental discriminants `>= lo`.
pub fn build_kronecker_family_first(lo: i64, count: usize) -> Result<Family, FamilyError> {
    let mut members = Vec::with_capacity(count);
    let mut d = lo;
    while members.len() < count {
        if crate::arith::is_fundamental_discriminant(d) {
            members.push(DirichletCharacter::kronecker(d)?);
        }
        d += 1;
    }
    let hi = d - 1;
    Ok(
        Family::from_characters(format!("kron-D{lo}-{hi}"), FamilyKind::KroneckerRange, members)?
            .with_provenance(&[("discriminant_lo", lo.to_string()), ("discriminant_hi", hi.to_string())]),
    )
}

/// Seeded conjugation-closed family of odd characters mod a prime.
pub fn build_odd_character_family(q: u64, count: usize, seed: u64) -> Result<Family, FamilyError> {
    let sampled = build_odd_family(q, count, seed)?;
    let mut provenance = vec![
        ("modulus", q.to_string()),
        ("count", count.to_string()),
        ("seed", seed.to_string()),
    ];
    if let Some(k) = sampled.excluded_self_conjugate {
        provenance.push(("excluded_self_conjugate", k.to_string()));
    }
    Ok(Family::from_characters(
        format!("odd-q{q}-n{count}-s{seed}"),
        FamilyKind::OddModPrime,
        sampled.members().to_vec(),
    )?
    .with_provenance(&provenance))
}

/// Zeros to height `height` for every member and, for complex members, its
/// conjugate. Members are searched in parallel.
pub fn compute_family_zeros(
    family: &Family,
    height: f64,
    acc: &EvalAccuracy,
    grid_step: Option<f64>,
) -> Result<ZeroMap, FamilyError> {
    let chars = family.characters()?;
    let mut needed: Vec<DirichletCharacter> = Vec::new();
    let mut seen = HashSet::new();
    for chi in chars {
        for c in [chi.clone(), chi.conjugate()] {
            if seen.insert(c.id()) {
                needed.push(c);
            }
        }
    }
    let lists = needed
        .par_iter()
        .map(|c| find_zeros(c, height, acc, grid_step))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(lists.into_iter().map(|z| (z.object_id.clone(), z)).collect())
}

/// Binned positive ordinates across a family.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroDensityHistogram {
    pub family_id: String,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<f64>,
    pub normalized: bool,
    pub member_count: usize,
}

impl ZeroDensityHistogram {
    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Peak-to-trough contrast of the counts after a centred moving average of
    /// `2 * half_width + 1` bins, ignoring the first `skip` bins.
    pub fn smoothed_contrast(&self, half_width: usize, skip: usize) -> f64 {
        let n = self.counts.len();
        let smooth: Vec<f64> = (half_width..n.saturating_sub(half_width))
            .map(|i| self.counts[i - half_width..=i + half_width].iter().sum::<f64>() / (2 * half_width + 1) as f64)
            .skip(skip)
            .collect();
        let max = smooth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = smooth.iter().cloned().fold(f64::INFINITY, f64::min);
        if smooth.is_empty() || min <= 0.0 {
            return f64::INFINITY;
        }
        max / min
    }
}

/// Edges `0, w, 2w, ...` up to the first edge `>= gamma_max`.
pub fn uniform_bins(bin_width: f64, gamma_max: f64) -> Result<Vec<f64>, FamilyError> {
    if !(bin_width > 0.0 && gamma_max > 0.0 && bin_width.is_finite() && gamma_max.is_finite()) {
        return Err(FamilyError::Histogram(format!(
            "bin width {bin_width}, gamma_max {gamma_max}"
        )));
    }
    let n = (gamma_max / bin_width - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=n).map(|i| i as f64 * bin_width).collect())
}

/// Histogram of the positive ordinates `< last edge` of every member, over
/// half-open bins `[lo, hi)`. Counts are divided by the family size when
/// `normalize` is set.
pub fn zero_density(
    family: &Family,
    zeros: &ZeroMap,
    bin_edges: &[f64],
    normalize: bool,
) -> Result<ZeroDensityHistogram, FamilyError> {
    let lists = family
        .member_ids()
        .into_iter()
        .map(|id| zeros.get(&id).ok_or(FamilyError::MissingZeros { member: id }))
        .collect::<Result<Vec<_>, _>>()?;
    zero_density_of_lists(&family.id, &lists, bin_edges, normalize)
}

/// [`zero_density`] over explicit zero lists, one per member.
pub fn zero_density_of_lists(
    family_id: &str,
    lists: &[&ZeroList],
    bin_edges: &[f64],
    normalize: bool,
) -> Result<ZeroDensityHistogram, FamilyError> {
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FamilyError::Histogram("bin edges must be strictly increasing".into()));
    }
    if lists.is_empty() {
        return Err(FamilyError::Empty(family_id.to_string()));
    }
    let top = *bin_edges.last().unwrap();
    let mut counts = vec![0.0; bin_edges.len() - 1];
    for list in lists {
        if list.source == ZeroSource::Computed && list.height_bound < top {
            return Err(FamilyError::Coverage {
                member: list.object_id.clone(),
                request: format!("gamma < {top}"),
            });
        }
        for &g in list.gammas.iter().take_while(|&&g| g < top) {
            if g < bin_edges[0] {
                continue;
            }
            let bin = bin_edges.partition_point(|&e| e <= g) - 1;
            counts[bin] += 1.0;
        }
    }
    if normalize {
        let n = lists.len() as f64;
        counts.iter_mut().for_each(|c| *c /= n);
    }
    Ok(ZeroDensityHistogram {
        family_id: family_id.to_string(),
        bin_edges: bin_edges.to_vec(),
        counts,
        normalized: normalize,
        member_count: lists.len(),
    })
}

/// Zero term `sum x^{ig} / (1/2 + ig)` with the family's zeros replaced by a
/// normalized, symmetric histogram (each bin's mass placed at its centre).
pub fn histogram_zero_term(hist: &ZeroDensityHistogram, x: f64) -> f64 {
    let scale = if hist.normalized {
        1.0
    } else {
        1.0 / hist.member_count as f64
    };
    hist.bin_edges
        .windows(2)
        .zip(&hist.counts)
        .map(|(w, &c)| c * scale * zero_pair_term(0.5 * (w[0] + w[1]), x))
        .sum()
}

/// `n` points geometric from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, FamilyError> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(FamilyError::Grid(format!(
            "need 0 < lo < hi and n >= 2, got {lo}, {hi}, {n}"
        )));
    }
    let ratio = (hi / lo).ln();
    let mut grid: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp()).collect();
    grid[n - 1] = hi;
    Ok(grid)
}

/// Geometric grid from 2 to `0.99 * primes.limit()`.
pub fn default_x_grid(primes: &PrimeTable, n: usize) -> Result<Vec<f64>, FamilyError> {
    geometric_grid(2.0, 0.99 * primes.limit() as f64, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMetadata {
    pub family_id: String,
    pub member_count: usize,
    pub truncation: Truncation,
    /// `1 - 2 * mean rank` for curve families.
    pub mean_rank_term: Option<f64>,
    pub include_r: bool,
}

/// Family averages on a common grid. `black = avg_lhs + avg_zero_term`.
///
/// Gold conventions:
/// - curves: `+ mean sum_n x^{ig}/(1/2+ig)`, so black is `1 - 2 r + Err` on average;
/// - even characters: `log x / sqrt x + sum_g`, minus `R(x)` when `include_r`;
/// - odd characters: `sum_g` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct MurmurationSeries {
    pub x_grid: Vec<f64>,
    pub avg_lhs: Vec<Complex64>,
    pub avg_zero_term: Vec<Complex64>,
    pub black: Vec<Complex64>,
    pub metadata: SeriesMetadata,
}

impl MurmurationSeries {
    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    /// Largest `|Im z| / (1 + |z|)` over all three columns.
    pub fn max_relative_imag(&self) -> f64 {
        self.avg_lhs
            .iter()
            .chain(&self.avg_zero_term)
            .chain(&self.black)
            .map(|z| z.im.abs() / (1.0 + z.norm()))
            .fold(0.0, f64::max)
    }
}

fn check_grid(x_grid: &[f64], primes: &PrimeTable) -> Result<(), FamilyError> {
    if x_grid.is_empty() {
        return Err(FamilyError::Grid("empty grid".into()));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FamilyError::Grid("grid must be strictly increasing".into()));
    }
    if !(x_grid[0] > 1.0) {
        return Err(FamilyError::Grid(format!("grid starts at {} <= 1", x_grid[0])));
    }
    let last = *x_grid.last().unwrap();
    if !primes.covers(last) {
        return Err(FamilyError::Formula(FormulaError::InsufficientPrimes {
            x: last,
            limit: primes.limit(),
        }));
    }
    Ok(())
}

fn covered<'a>(zeros: &'a ZeroMap, id: &str, trunc: Truncation) -> Result<&'a ZeroList, FamilyError> {
    let list = zeros
        .get(id)
        .ok_or_else(|| FamilyError::MissingZeros { member: id.to_string() })?;
    let ok = match trunc {
        Truncation::All => true,
        Truncation::Count(n) => list.len() >= n,
        Truncation::Height(t) => list.height_bound >= t,
    };
    if ok {
        Ok(list)
    } else {
        Err(FamilyError::Coverage {
            member: id.to_string(),
            request: trunc.to_string(),
        })
    }
}

/// Fixed-order column means of per-member rows.
fn mean_rows(rows: &[Vec<Complex64>], len: usize) -> Vec<Complex64> {
    let n = rows.len() as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for row in rows {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= n);
    out
}

fn assemble(
    x_grid: &[f64],
    rows: Vec<(Vec<Complex64>, Vec<Complex64>)>,
    metadata: SeriesMetadata,
) -> MurmurationSeries {
    let (lhs_rows, gold_rows): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let avg_lhs = mean_rows(&lhs_rows, x_grid.len());
    let avg_zero_term = mean_rows(&gold_rows, x_grid.len());
    let black = avg_lhs.iter().zip(&avg_zero_term).map(|(a, b)| a + b).collect();
    MurmurationSeries {
        x_grid: x_grid.to_vec(),
        avg_lhs,
        avg_zero_term,
        black,
        metadata,
    }
}

/// Averaged elliptic explicit formula over a curve family.
pub fn murmuration_series_elliptic(
    family: &Family,
    zeros: &ZeroMap,
    x_grid: &[f64],
    trunc: Truncation,
    primes: &PrimeTable,
) -> Result<MurmurationSeries, FamilyError> {
    let curves = family.curves()?;
    check_grid(x_grid, primes)?;
    let lists = curves
        .iter()
        .map(|e| covered(zeros, e.label(), trunc))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = curves
        .par_iter()
        .zip(lists.par_iter())
        .map(|(e, z)| -> Result<_, FamilyError> {
            let formula = EllipticFormula::new(e, primes);
            let mut lhs = Vec::with_capacity(x_grid.len());
            let mut gold = Vec::with_capacity(x_grid.len());
            for &x in x_grid {
                lhs.push(Complex64::new(formula.lhs(x)?, 0.0));
                gold.push(zero_sum_truncated(ZeroSet::SelfConjugate(z), x, trunc));
            }
            Ok((lhs, gold))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean_rank = curves.iter().map(|e| e.rank() as f64).sum::<f64>() / curves.len() as f64;
    Ok(assemble(
        x_grid,
        rows,
        SeriesMetadata {
            family_id: family.id.clone(),
            member_count: curves.len(),
            truncation: trunc,
            mean_rank_term: Some(1.0 - 2.0 * mean_rank),
            include_r: false,
        },
    ))
}

fn zero_set_for<'a>(
    chi: &DirichletCharacter,
    zeros: &'a ZeroMap,
    trunc: Truncation,
) -> Result<ZeroSet<'a>, FamilyError> {
    let own = covered(zeros, &chi.id(), trunc)?;
    if chi.is_real() {
        Ok(ZeroSet::SelfConjugate(own))
    } else {
        let conjugate = covered(zeros, &chi.conjugate().id(), trunc)?;
        Ok(ZeroSet::Pair { own, conjugate })
    }
}

/// Averaged Dirichlet explicit formula over a real or conjugation-closed
/// character family.
pub fn murmuration_series_dirichlet(
    family: &Family,
    zeros: &ZeroMap,
    x_grid: &[f64],
    trunc: Truncation,
    include_r: bool,
    primes: &PrimeTable,
    acc: &EvalAccuracy,
) -> Result<MurmurationSeries, FamilyError> {
    let chars = family.characters()?;
    if !family.is_conjugation_closed() {
        return Err(FamilyError::NotConjugationClosed(family.id.clone()));
    }
    if include_r {
        if let Some(odd) = chars.iter().find(|c| !c.is_even()) {
            return Err(FamilyError::Parity { member: odd.id() });
        }
    }
    check_grid(x_grid, primes)?;
    let sets = chars
        .iter()
        .map(|c| zero_set_for(c, zeros, trunc))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = chars
        .par_iter()
        .zip(sets.par_iter())
        .map(|(chi, &set)| -> Result<_, FamilyError> {
            let formula = DirichletFormula::new(chi, primes, include_r, acc)?;
            let mut lhs = Vec::with_capacity(x_grid.len());
            let mut gold = Vec::with_capacity(x_grid.len());
            for &x in x_grid {
                lhs.push(formula.lhs(x)?);
                let mut g = zero_sum_truncated(set, x, trunc);
                if chi.is_even() {
                    g += x.ln() / x.sqrt();
                }
                if include_r {
                    g -= formula.r_chi(x)?.total;
                }
                gold.push(g);
            }
            Ok((lhs, gold))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(
        x_grid,
        rows,
        SeriesMetadata {
            family_id: family.id.clone(),
            member_count: chars.len(),
            truncation: trunc,
            mean_rank_term: None,
            include_r,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub location: f64,
    pub size: f64,
}

/// Mean of the real black curve on `(c, c + w]` minus its mean on `[c - w, c)`,
/// for every candidate; sorted by decreasing `|size|`.
pub fn detect_jumps(series: &MurmurationSeries, candidates: &[f64], window: f64) -> Result<Vec<Jump>, FamilyError> {
    if !(window > 0.0) {
        return Err(FamilyError::Grid(format!("window must be positive, got {window}")));
    }
    let xs = &series.x_grid;
    let mut out = Vec::with_capacity(candidates.len());
    for &c in candidates {
        let lo = xs.partition_point(|&x| x < c - window);
        let mid_left = xs.partition_point(|&x| x < c);
        let mid_right = xs.partition_point(|&x| x <= c);
        let hi = xs.partition_point(|&x| x <= c + window);
        let (left, right) = (mid_left - lo, hi - mid_right);
        if left < MIN_POINTS_PER_SIDE || right < MIN_POINTS_PER_SIDE {
            return Err(FamilyError::Resolution {
                candidate: c,
                left,
                right,
            });
        }
        let mean = |r: std::ops::Range<usize>| {
            let n = r.len() as f64;
            series.black[r].iter().map(|z| z.re).sum::<f64>() / n
        };
        out.push(Jump {
            location: c,
            size: mean(mid_right..hi) - mean(lo..mid_left),
        });
    }
    out.sort_by(|a, b| {
        b.size
            .abs()
            .total_cmp(&a.size.abs())
            .then(a.location.total_cmp(&b.location))
    });
    Ok(out)
}

/// Squares of primes below `x_max`, together with 16 when it fits.
pub fn default_jump_candidates(x_max: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (2u64..)
        .take_while(|&p| ((p * p) as f64) < x_max)
        .filter(|&p| crate::arith::is_prime(p))
        .map(|p| (p * p) as f64)
        .collect();
    if 16.0 < x_max {
        out.push(16.0);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Linear interpolation of `(xs, ys)` at `n` points uniform in `log x`.
fn resample_log_uniform(xs: &[f64], ys: &[f64], n: usize) -> Vec<f64> {
    let (l0, l1) = (xs[0].ln(), xs[xs.len() - 1].ln());
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    (0..n)
        .map(|i| {
            let t = l0 + (l1 - l0) * i as f64 / (n - 1) as f64;
            let j = logs.partition_point(|&l| l <= t).clamp(1, logs.len() - 1);
            let (a, b) = (logs[j - 1], logs[j]);
            let w = if b > a { (t - a) / (b - a) } else { 0.0 };
            ys[j - 1] + w * (ys[j] - ys[j - 1])
        })
        .collect()
}

/// `max_{1 <= k <= N/2} |X_k| / (N * rms)` for the real gold curve resampled
/// at `N` points uniform in `log x`, where `X` is the unnormalized DFT and
/// `rms` is taken after removing the mean. A pure sinusoid on a whole number
/// of periods scores `1/sqrt 2`; a constant curve scores 0.
pub fn structure_metric(series: &MurmurationSeries) -> Result<f64, FamilyError> {
    let n = series.len();
    if n < 4 {
        return Err(FamilyError::Grid(format!(
            "structure metric needs at least 4 points, got {n}"
        )));
    }
    if let Some(z) = series
        .avg_zero_term
        .iter()
        .find(|z| z.im.abs() > REALITY_TOLERANCE * (1.0 + z.norm()))
    {
        return Err(FamilyError::NotReal(format!("gold value {z}")));
    }
    let gold: Vec<f64> = series.avg_zero_term.iter().map(|z| z.re).collect();
    let samples = resample_log_uniform(&series.x_grid, &gold, n);
    Ok(spectral_peak_ratio(&samples))
}

/// The ratio used by [`structure_metric`] on already uniform samples.
pub fn spectral_peak_ratio(samples: &[f64]) -> f64 {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = samples.iter().map(|v| v - mean).collect();
    let rms = (centred.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if !(rms > 1e-300) || rms < 1e-14 * (1.0 + mean.abs()) {
        return 0.0;
    }
    let mut buf: Vec<Complex64> = centred.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = buf[1..=n / 2].iter().map(|z| z.norm()).fold(0.0, f64::max);
    peak / (n as f64 * rms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_primes;
    use proptest::prelude::*;
    use rand_core::{RngCore, SeedableRng};
    use rand_xoshiro::Xoshiro256StarStar;

    fn curve(label: &str, a: [i64; 5], n: u64, r: u32) -> EllipticCurve {
        EllipticCurve::new(label, a, n, r).unwrap()
    }

    fn toy_curves() -> Vec<EllipticCurve> {
        vec![
            curve("11a1", [0, -1, 1, -10, -20], 11, 0),
            curve("37b1", [0, 1, 1, -23, -50], 37, 0),
            curve("37a1", [0, 0, 1, -1, 0], 37, 1),
            curve("389a1", [0, 1, 1, -2, 0], 389, 2),
        ]
    }

    fn zl(id: &str, g: &[f64]) -> ZeroList {
        ZeroList::ingested(id, g.to_vec()).unwrap()
    }

    #[test]
    fn elliptic_family_filters() {
        let fam = build_elliptic_family(&toy_curves(), 10, 40, 0).unwrap();
        assert_eq!(fam.member_ids(), vec!["11a1", "37b1"]);
        assert_eq!(fam.kind, FamilyKind::EllipticRank0);
        let r2 = build_elliptic_family(&toy_curves(), 1, 1000, 2).unwrap();
        assert_eq!(r2.kind, FamilyKind::EllipticCustom);
        assert!(matches!(
            build_elliptic_family(&toy_curves(), 12, 36, 0),
            Err(FamilyError::Empty(_))
        ));
    }

    #[test]
    fn kronecker_families() {
        let fam = build_kronecker_family(1, 30).unwrap();
        let ds: Vec<i64> = vec![5, 8, 12, 13, 17, 21, 24, 28, 29];
        let got: Vec<String> = fam.member_ids();
        let want: Vec<String> = ds
            .iter()
            .map(|d| DirichletCharacter::kronecker(*d).unwrap().id())
            .collect();
        assert_eq!(got, want);
        assert_eq!(build_kronecker_family(9000, 10000).unwrap().len(), 307);
        assert!(matches!(build_kronecker_family(6, 7), Err(FamilyError::Empty(_))));
        let first = build_kronecker_family_first(5, 9).unwrap();
        assert_eq!(first.member_ids(), want);
        assert!(fam.is_conjugation_closed());
    }

    #[test]
    fn odd_family_wrapper() {
        let fam = build_odd_character_family(7, 2, 1).unwrap();
        assert_eq!(fam.len(), 2);
        assert!(fam.is_conjugation_closed());
        assert!(fam
            .provenance
            .iter()
            .any(|(k, v)| k == "excluded_self_conjugate" && v == "3"));
        let one =
            Family::from_characters("x", FamilyKind::OddModPrime, vec![fam.characters().unwrap()[0].clone()]).unwrap();
        assert!(!one.is_conjugation_closed());
    }

    #[test]
    fn histogram_basics() {
        let fam = build_elliptic_family(&toy_curves()[..1], 1, 100, 0).unwrap();
        let mut zeros = ZeroMap::new();
        zeros.insert("11a1".into(), zl("11a1", &[1.0, 2.5]));
        let h = zero_density(&fam, &zeros, &[0.0, 1.0, 2.0, 3.0], false).unwrap();
        assert_eq!(h.counts, vec![0.0, 1.0, 1.0]);

        let fam2 = build_elliptic_family(&toy_curves(), 10, 40, 0).unwrap();
        zeros.insert("37b1".into(), zl("37b1", &[0.7, 1.2, 2.2, 9.0]));
        let edges = uniform_bins(0.5, 3.0).unwrap();
        assert_eq!(edges.len(), 7);
        let h = zero_density(&fam2, &zeros, &edges, true).unwrap();
        assert_eq!(h.bin_count(), edges.len() - 1);
        assert!((h.total() - 5.0 / 2.0).abs() < 1e-15);
        assert!(matches!(
            zero_density(
                &build_elliptic_family(&toy_curves(), 1, 40, 1).unwrap(),
                &zeros,
                &edges,
                false
            ),
            Err(FamilyError::MissingZeros { .. })
        ));
        assert!(uniform_bins(0.0, 3.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn fine_bins_isolate_each_zero(raw in proptest::collection::btree_set(1u32..10_000, 1..40)) {
            let gammas: Vec<f64> = raw.iter().map(|&v| v as f64 * 1e-3).collect();
            let fam = build_elliptic_family(&toy_curves()[..1], 1, 100, 0).unwrap();
            let mut zeros = ZeroMap::new();
            zeros.insert("11a1".into(), zl("11a1", &gammas));
            let h = zero_density(&fam, &zeros, &uniform_bins(1e-4, 11.0).unwrap(), false).unwrap();
            let occupied: Vec<(f64, f64, f64)> = h.bin_edges.windows(2).zip(&h.counts)
                .filter(|(_, &c)| c > 0.0).map(|(w, &c)| (w[0], w[1], c)).collect();
            prop_assert_eq!(occupied.len(), gammas.len());
            for ((lo, hi, c), g) in occupied.iter().zip(&gammas) {
                prop_assert_eq!(*c, 1.0);
                prop_assert!(*lo <= *g && *g < *hi);
            }
        }
    }

    #[test]
    fn histogram_zero_term_tracks_exact_sum() {
        let fam = build_elliptic_family(&toy_curves()[..1], 1, 100, 0).unwrap();
        let gammas: Vec<f64> = (1..40).map(|i| i as f64 * 0.731 + 0.1).collect();
        let mut zeros = ZeroMap::new();
        zeros.insert("11a1".into(), zl("11a1", &gammas));
        let h = zero_density(&fam, &zeros, &uniform_bins(1e-3, 40.0).unwrap(), true).unwrap();
        for x in [3.0, 10.0, 50.0] {
            let exact = zero_sum_truncated(ZeroSet::SelfConjugate(&zeros["11a1"]), x, Truncation::All).re;
            assert!((histogram_zero_term(&h, x) - exact).abs() < 5e-3, "x={x}");
        }
    }

    fn toy_zero_map() -> ZeroMap {
        let mut z = ZeroMap::new();
        z.insert(
            "11a1".into(),
            zl("11a1", &[6.36261389, 8.60353962, 10.03550910, 11.45125861]),
        );
        z.insert("37b1".into(), zl("37b1", &[5.00317001, 6.87039122, 8.01433081]));
        z.insert("37a1".into(), zl("37a1", &[5.00317001, 6.87039122, 8.01433081]));
        z.insert("389a1".into(), zl("389a1", &[2.87609907, 4.41689608]));
        z
    }

    #[test]
    fn degenerate_elliptic_family() {
        let primes = sieve_primes(1000).unwrap();
        let fam = build_elliptic_family(&toy_curves()[..1], 1, 100, 0).unwrap();
        let mut zeros = ZeroMap::new();
        zeros.insert("11a1".into(), zl("11a1", &[]));
        let grid = geometric_grid(2.0, 900.0, 300).unwrap();
        let s = murmuration_series_elliptic(&fam, &zeros, &grid, Truncation::All, &primes).unwrap();
        assert!(s.avg_zero_term.iter().all(|z| z.norm() == 0.0));
        assert_eq!(s.black, s.avg_lhs);
        assert_eq!(s.metadata.mean_rank_term, Some(1.0));
        assert!(matches!(
            murmuration_series_elliptic(&fam, &zeros, &grid, Truncation::Count(3), &primes),
            Err(FamilyError::Coverage { .. })
        ));
        assert!(murmuration_series_elliptic(&fam, &ZeroMap::new(), &grid, Truncation::All, &primes).is_err());
        assert!(murmuration_series_elliptic(&fam, &zeros, &[2.0, 1001.0], Truncation::All, &primes).is_err());
    }

    #[test]
    fn elliptic_heuristic_consistency() {
        let primes = sieve_primes(2000).unwrap();
        let curves = toy_curves();
        let fam = Family::from_curves("all", FamilyKind::EllipticCustom, curves.clone()).unwrap();
        let zeros = toy_zero_map();
        let grid = geometric_grid(2.0, 1900.0, 400).unwrap();
        let trunc = Truncation::All;
        let s = murmuration_series_elliptic(&fam, &zeros, &grid, trunc, &primes).unwrap();
        let base = s.metadata.mean_rank_term.unwrap();
        assert!((base - (1.0 - 2.0 * 3.0 / 4.0)).abs() < 1e-15);
        let formulas: Vec<EllipticFormula> = curves.iter().map(|e| EllipticFormula::new(e, &primes)).collect();
        for (i, &x) in grid.iter().enumerate() {
            let mean_residual: f64 = formulas
                .iter()
                .map(|f| f.sample(&zeros[f.curve().label()], x, trunc).unwrap().residual.re)
                .sum::<f64>()
                / curves.len() as f64;
            assert!((s.black[i].re - base - mean_residual).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_series_conventions() {
        let primes = sieve_primes(3000).unwrap();
        let acc = EvalAccuracy::default();
        let fam = build_kronecker_family(5, 13).unwrap();
        let zeros = compute_family_zeros(&fam, 30.0, &acc, None).unwrap();
        let grid = geometric_grid(2.0, 2900.0, 500).unwrap();
        let trunc = Truncation::Height(30.0);
        let plain = murmuration_series_dirichlet(&fam, &zeros, &grid, trunc, false, &primes, &acc).unwrap();
        let with_r = murmuration_series_dirichlet(&fam, &zeros, &grid, trunc, true, &primes, &acc).unwrap();
        assert_eq!(plain.avg_lhs, with_r.avg_lhs);
        assert!(plain.max_relative_imag() <= REALITY_TOLERANCE);
        let chars = fam.characters().unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let mut mean_r = Complex64::new(0.0, 0.0);
            let mut mean_res = Complex64::new(0.0, 0.0);
            for chi in chars {
                let f = DirichletFormula::new(chi, &primes, true, &acc).unwrap();
                mean_r += f.r_chi(x).unwrap().total;
                if x >= 2.0 {
                    mean_res += f
                        .sample(ZeroSet::SelfConjugate(&zeros[&chi.id()]), x, trunc)
                        .unwrap()
                        .residual;
                }
            }
            mean_r /= chars.len() as f64;
            mean_res /= chars.len() as f64;
            assert!((plain.black[i] - with_r.black[i] - mean_r).norm() < 1e-12);
            assert!((with_r.black[i] - mean_res).norm() < 1e-12);
        }

        let odd = build_odd_character_family(13, 2, 3).unwrap();
        let oz = compute_family_zeros(&odd, 20.0, &acc, None).unwrap();
        assert!(matches!(
            murmuration_series_dirichlet(&odd, &oz, &grid, Truncation::All, true, &primes, &acc),
            Err(FamilyError::Parity { .. })
        ));
        let s = murmuration_series_dirichlet(&odd, &oz, &grid, Truncation::All, false, &primes, &acc).unwrap();
        assert!(s.max_relative_imag() <= REALITY_TOLERANCE);
        let half =
            Family::from_characters("h", FamilyKind::OddModPrime, vec![odd.characters().unwrap()[0].clone()]).unwrap();
        assert!(matches!(
            murmuration_series_dirichlet(&half, &oz, &grid, Truncation::All, false, &primes, &acc),
            Err(FamilyError::NotConjugationClosed(_))
        ));
    }

    fn random_zero_map(curves: &[EllipticCurve], rng: &mut Xoshiro256StarStar) -> ZeroMap {
        curves
            .iter()
            .map(|e| {
                let mut g = 0.0;
                let gammas: Vec<f64> = (0..(rng.next_u64() % 12))
                    .map(|_| {
                        g += 0.05 + (rng.next_u64() % 1000) as f64 / 300.0;
                        g
                    })
                    .collect();
                (e.label().to_string(), zl(e.label(), &gammas))
            })
            .collect()
    }

    #[test]
    fn linearity_and_determinism_on_random_families() {
        let primes = sieve_primes(1500).unwrap();
        let grid = geometric_grid(2.0, 1400.0, 250).unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(11);
        let pool: Vec<EllipticCurve> = (0..12)
            .map(|i| {
                let a4 = -((rng.next_u64() % 30) as i64) - 1;
                let a6 = (rng.next_u64() % 40) as i64 - 20;
                let a = [0, 0, 0, a4, a6];
                let ec = EllipticCurve::new(format!("t{i}"), a, 1, (rng.next_u64() % 3) as u32);
                ec.unwrap_or_else(|_| curve(&format!("t{i}"), [0, 0, 0, -1, 1], 1, 0))
            })
            .collect();
        for round in 0..5 {
            let zeros = random_zero_map(&pool, &mut rng);
            let split = 1 + (rng.next_u64() % (pool.len() as u64 - 1)) as usize;
            let (a, b) = pool.split_at(split);
            let fa = Family::from_curves("a", FamilyKind::EllipticCustom, a.to_vec()).unwrap();
            let fb = Family::from_curves("b", FamilyKind::EllipticCustom, b.to_vec()).unwrap();
            let fu = Family::from_curves("u", FamilyKind::EllipticCustom, pool.clone()).unwrap();
            let trunc = Truncation::All;
            let sa = murmuration_series_elliptic(&fa, &zeros, &grid, trunc, &primes).unwrap();
            let sb = murmuration_series_elliptic(&fb, &zeros, &grid, trunc, &primes).unwrap();
            let su = murmuration_series_elliptic(&fu, &zeros, &grid, trunc, &primes).unwrap();
            let (wa, wb) = (a.len() as f64 / pool.len() as f64, b.len() as f64 / pool.len() as f64);
            for i in 0..grid.len() {
                for (u, x, y) in [
                    (su.avg_lhs[i], sa.avg_lhs[i], sb.avg_lhs[i]),
                    (su.avg_zero_term[i], sa.avg_zero_term[i], sb.avg_zero_term[i]),
                    (su.black[i], sa.black[i], sb.black[i]),
                ] {
                    assert!((u - (wa * x + wb * y)).norm() < 1e-12, "round {round}");
                }
            }
            // remove the last member and add it back
            let mut shrunk = pool.clone();
            let last = shrunk.pop().unwrap();
            shrunk.push(last);
            let fr = Family::from_curves("u", FamilyKind::EllipticCustom, shrunk).unwrap();
            let sr = murmuration_series_elliptic(&fr, &zeros, &grid, trunc, &primes).unwrap();
            assert_eq!(sr, su);
        }
    }

    fn series_from(xs: Vec<f64>, black: Vec<f64>) -> MurmurationSeries {
        let z: Vec<Complex64> = black.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        MurmurationSeries {
            avg_lhs: z.clone(),
            avg_zero_term: z.clone(),
            black: z,
            x_grid: xs,
            metadata: SeriesMetadata {
                family_id: "synthetic".into(),
                member_count: 1,
                truncation: Truncation::All,
                mean_rank_term: None,
                include_r: false,
            },
        }
    }

    #[test]
    fn jumps_on_synthetic_step() {
        let xs = geometric_grid(2.0, 100.0, 2000).unwrap();
        let black: Vec<f64> = xs.iter().map(|&x| if x > 9.0 { 1.0 } else { 0.0 }).collect();
        let s = series_from(xs, black);
        let jumps = detect_jumps(&s, &[4.0, 9.0, 16.0, 25.0], 0.5).unwrap();
        assert_eq!(jumps[0].location, 9.0);
        assert!((jumps[0].size - 1.0).abs() < 1e-12);
        assert!(jumps[1..].iter().all(|j| j.size.abs() < 1e-12));
        let sparse = series_from(geometric_grid(2.0, 100.0, 50).unwrap(), vec![0.0; 50]);
        assert!(matches!(
            detect_jumps(&sparse, &[9.0], 0.5),
            Err(FamilyError::Resolution { .. })
        ));
    }

    #[test]
    fn jump_candidates() {
        assert_eq!(default_jump_candidates(50.0), vec![4.0, 9.0, 16.0, 25.0, 49.0]);
        assert_eq!(default_jump_candidates(10.0), vec![4.0, 9.0]);
    }

    #[test]
    fn structure_metric_closed_forms() {
        let n = 1024;
        let xs: Vec<f64> = (0..n)
            .map(|i| (2f64.ln() + 5.0 * i as f64 / (n - 1) as f64).exp())
            .collect();
        // whole number of periods on the resampled points
        let sine: Vec<f64> = (0..n)
            .map(|i| 3.0 + 2.0 * (2.0 * std::f64::consts::PI * 7.0 * i as f64 / n as f64).sin())
            .collect();
        let m = structure_metric(&series_from(xs.clone(), sine)).unwrap();
        assert!((m - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "{m}");
        assert_eq!(structure_metric(&series_from(xs.clone(), vec![4.2; n])).unwrap(), 0.0);

        let mut rng = Xoshiro256StarStar::seed_from_u64(5);
        let mut total = 0.0;
        let trials = 50;
        for _ in 0..trials {
            let noise: Vec<f64> = (0..n)
                .map(|_| (rng.next_u64() as f64 / u64::MAX as f64) - 0.5)
                .collect();
            total += structure_metric(&series_from(xs.clone(), noise)).unwrap();
        }
        let baseline = total / trials as f64;
        // max of n/2 Rayleigh magnitudes: about sqrt(ln(n/2) / n)
        let expected = ((n as f64 / 2.0).ln() / n as f64).sqrt();
        assert!((baseline / expected - 1.0).abs() < 0.25, "{baseline} vs {expected}");
        assert!(baseline < 0.2);

        let mut complex = series_from(xs, vec![1.0; n]);
        complex.avg_zero_term[3].im = 1e-3;
        assert!(matches!(structure_metric(&complex), Err(FamilyError::NotReal(_))));
    }

    #[test]
    fn resampling_is_exact_on_log_linear_data() {
        let xs = geometric_grid(2.0, 500.0, 100).unwrap();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.ln() - 1.0).collect();
        let r = resample_log_uniform(&xs, &ys, 37);
        for (i, v) in r.iter().enumerate() {
            let l = 2f64.ln() + (500f64.ln() - 2f64.ln()) * i as f64 / 36.0;
            assert!((v - (3.0 * l - 1.0)).abs() < 1e-12);
        }
    }
}
