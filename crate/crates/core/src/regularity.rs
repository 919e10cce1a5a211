//! g-continuity classification of `Delta g` and `Delta g*`, level-set
//! constancy, and the `BC^1_g` product-membership criterion.
//!
//! The symbolic classifiers here are the contract; the numeric continuity
//! oracle is the check. `Delta g` is g-discontinuous exactly on `A_g`
//! (points whose level-set supremum is a jump), while `Delta g*` recovers
//! continuity on `H_g` and on the initial plateau `[a, a*]`.

use serde::Serialize;

use crate::config;
use crate::derivator::{Derivator, DomainMode, Interval};
use crate::oracle::PointFn;
use crate::pointclass::classify_unchecked;
use crate::Result;

/// Symbolic g-continuity verdict at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContClass {
    Continuous,
    Discontinuous,
}

/// g-continuity of `Delta g` (`starred = false`) or `Delta g*` (`starred =
/// true`) at `t`, decided from the classification flags alone.
pub fn delta_continuity_class(
    g: &Derivator,
    t: f64,
    dom: Interval,
    starred: bool,
) -> Result<ContClass> {
    dom.require(t)?;
    if starred {
        g.require_domain(dom, DomainMode::Bc1)?;
    }
    let cls = classify_unchecked(g, t, dom);
    Ok(if starred {
        let a_star = g.star(dom.a(), dom)?;
        if t <= a_star || !cls.in_ag || cls.in_hg {
            ContClass::Continuous
        } else {
            ContClass::Discontinuous
        }
    } else if cls.in_ag {
        ContClass::Discontinuous
    } else {
        ContClass::Continuous
    })
}

/// Outcome of the level-set constancy check: g-continuity of `f` forces
/// `f(t) = f(s)` whenever `g(t) = g(s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LevelConstancy {
    Pass,
    /// two points with equal g-value but different f-values
    Witness(f64, f64),
}

/// Check `f` for constancy across the level set of `t`. Only points whose
/// g-value equals `g(t)` exactly are compared.
pub fn level_constancy_at(
    f: PointFn,
    g: &Derivator,
    t: f64,
    dom: Interval,
) -> Result<Option<(f64, f64)>> {
    let (lo, hi) = g.level_set(t, dom)?;
    if hi <= lo {
        return Ok(None);
    }
    let gt = g.value(t);
    let ft = f(t);
    let mut candidates = vec![lo, hi, 0.5 * (lo + hi)];
    for k in 1..8 {
        candidates.push(lo + (hi - lo) * k as f64 / 8.0);
    }
    for s in candidates {
        if s == t || !dom.contains(s) || g.value(s) != gt {
            continue;
        }
        if (f(s) - ft).abs() > config::EXACT_EQ {
            return Ok(Some((t, s)));
        }
    }
    Ok(None)
}

/// Sweep the exactly-computable level sets of `g` and compare `f` across
/// each; `Pass` iff `f` is constant on every sampled level set.
pub fn level_constancy_check(f: PointFn, g: &Derivator, dom: Interval) -> Result<LevelConstancy> {
    for t in structural_sample_points(g, dom, 400) {
        if let Some((a, b)) = level_constancy_at(f, g, t, dom)? {
            return Ok(LevelConstancy::Witness(a, b));
        }
    }
    Ok(LevelConstancy::Pass)
}

/// Outcome of the `BC^1_g` product criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Bc1Outcome {
    Holds,
    /// points of `((a*, b) ∩ A_g) \ H_g` where the product of derivatives
    /// fails to vanish, sorted by position
    Fails { witnesses: Vec<f64> },
}

impl Bc1Outcome {
    pub fn holds(&self) -> bool {
        matches!(self, Bc1Outcome::Holds)
    }
}

/// The product `f1 f2` of two `BC^1_g` functions stays in `BC^1_g` iff
/// `f1'_g(t) f2'_g(t) = 0` on `((a*, b) ∩ A_g) \ H_g`. The exceptional set
/// is enumerated symbolically: jumps inside `(a*, b)` together with their
/// level sets, minus the `H_g` stretches. Family enumeration is truncated
/// at the configured cap; beyond it the jump masses (hence the
/// discontinuities a violation would cause) vanish below the exactness
/// threshold for bounded derivatives.
pub fn bc1_product_check(
    f1_deriv: PointFn,
    f2_deriv: PointFn,
    g: &Derivator,
    dom: Interval,
) -> Result<Bc1Outcome> {
    g.require_domain(dom, DomainMode::Bc1)?;
    let a_star = g.star(dom.a(), dom)?;
    let b = dom.b();
    if !(a_star < b) {
        return Ok(Bc1Outcome::Holds);
    }
    let jumps = g.jumps_in(a_star, b, config::FAMILY_ENUM_CAP)?;
    let mut witnesses: Vec<f64> = Vec::new();
    for (pos, _) in jumps.jumps {
        let (lo, hi) = g.level_set(pos, dom)?;
        let mut cands = vec![pos];
        if hi > lo {
            cands.push(lo);
            for k in 1..4 {
                cands.push(lo + (hi - lo) * k as f64 / 4.0);
            }
        }
        for t in cands {
            if !(a_star < t && t < b) {
                continue;
            }
            let cls = classify_unchecked(g, t, dom);
            if !cls.in_ag || cls.in_hg {
                continue;
            }
            let prod = f1_deriv(t) * f2_deriv(t);
            if prod.abs() > config::EXACT_EQ {
                witnesses.push(t);
            }
        }
    }
    witnesses.sort_by(f64::total_cmp);
    witnesses.dedup();
    Ok(if witnesses.is_empty() {
        Bc1Outcome::Holds
    } else {
        Bc1Outcome::Fails { witnesses }
    })
}

/// One row of a regularity report.
#[derive(Debug, Clone, Serialize)]
pub struct PointVerdict {
    pub t: f64,
    pub continuous: bool,
}

/// Report of a continuity sweep, with failing points as witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub subject: String,
    pub verdicts: Vec<PointVerdict>,
    pub witnesses: Vec<f64>,
}

/// Classify `Delta g` or `Delta g*` over a structural sample of the domain.
pub fn delta_continuity_sweep(
    g: &Derivator,
    dom: Interval,
    starred: bool,
    grid: usize,
) -> Result<RegularityReport> {
    let mut verdicts = Vec::new();
    let mut witnesses = Vec::new();
    for t in structural_sample_points(g, dom, grid) {
        let class = delta_continuity_class(g, t, dom, starred)?;
        let continuous = class == ContClass::Continuous;
        if !continuous {
            witnesses.push(t);
        }
        verdicts.push(PointVerdict { t, continuous });
    }
    Ok(RegularityReport {
        subject: if starred { "delta_g_star" } else { "delta_g" }.into(),
        verdicts,
        witnesses,
    })
}

/// Deterministic sample of the domain biased toward structure: a uniform
/// grid plus jump positions, flat-gap midpoints, and level-set landmarks.
pub fn structural_sample_points(g: &Derivator, dom: Interval, grid: usize) -> Vec<f64> {
    let (a, b) = (dom.a(), dom.b());
    let mut pts = Vec::with_capacity(grid + 64);
    pts.push(a);
    for i in 1..grid {
        pts.push(a + (b - a) * i as f64 / grid as f64);
    }
    pts.push(b);
    for atom in g.atoms() {
        if dom.contains(atom.at) {
            pts.push(atom.at);
        }
    }
    for fam in g.families() {
        if dom.contains(fam.accumulation) {
            pts.push(fam.accumulation);
        }
        for n in fam.n_start..fam.n_start + 12 {
            let p = fam.position(n);
            let mid = 0.5 * (p + fam.position(n + 1));
            if dom.contains(p) {
                pts.push(p);
            }
            if dom.contains(mid) {
                pts.push(mid);
            }
        }
    }
    for seg in g.segments() {
        if dom.contains(seg.from) {
            pts.push(seg.from);
            let eps = 1.0 / 64.0;
            if dom.contains(seg.from + eps) {
                pts.push(seg.from + eps);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}
