//! Numeric ground truth from the limit definitions.
//!
//! Everything here evaluates limits by sampling: no closed forms, no rule
//! tables. Sample points shrink geometrically toward the target so that
//! divergent quotients escape geometrically and convergent ones stabilize
//! within the fixed window. Where the classification flags say a family of
//! jumps (or the chain of flat gaps between them) accumulates at the point,
//! the corresponding exact positions are sampled as their own sequences:
//! the defining limits split into jump and non-jump approaches, and the
//! oracle mirrors that split. A limit exists only when every applicable
//! sequence stabilizes to a common value.

use serde::Serialize;

use crate::config;
use crate::derivator::{Derivator, DomainMode, FamilySide, Interval, JumpFamily};
use crate::error::Error;
use crate::pointclass::{classify_unchecked, PointClassification};
use crate::Result;

/// A plain real-valued point function under test.
pub type PointFn<'a> = &'a (dyn Fn(f64) -> f64 + 'a);

/// Outcome of a numeric limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Verdict {
    /// all applicable sequences stabilized to a common value
    Converged(f64),
    /// some sequence escaped monotonically; sign of the escape
    Diverges(i8),
    /// bounded evidence that stabilizes to nothing, or to different values
    NoLimit,
    /// the requested approach set does not accumulate at the point
    NotApplicable,
}

impl Verdict {
    pub fn converged_value(&self) -> Option<f64> {
        match self {
            Verdict::Converged(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_converged_to(&self, target: f64, tol: f64) -> bool {
        matches!(self, Verdict::Converged(v) if (v - target).abs() <= tol)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Converged(v) => write!(f, "converged {v:.12}"),
            Verdict::Diverges(s) => write!(f, "diverges({})", if *s >= 0 { '+' } else { '-' }),
            Verdict::NoLimit => f.write_str("no-limit"),
            Verdict::NotApplicable => f.write_str("not-applicable"),
        }
    }
}

/// One sampled point of one sequence.
#[derive(Debug, Clone, Serialize)]
pub struct EvidenceRow {
    pub sequence: String,
    pub sample: f64,
    pub value: f64,
}

/// Outcome of a numeric limit together with the samples that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct LimitResult {
    pub verdict: Verdict,
    pub evidence: Vec<EvidenceRow>,
}

impl LimitResult {
    fn bare(verdict: Verdict) -> Self {
        LimitResult {
            verdict,
            evidence: Vec::new(),
        }
    }
}

/// Lateral g-continuity verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SideVerdict {
    Continuous,
    Discontinuous,
    /// no sample other than t itself qualifies at small thresholds
    Vacuous,
}

/// g-continuity verdict at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityVerdict {
    pub left: SideVerdict,
    pub right: SideVerdict,
    /// worst offender seen at the finest threshold
    pub sup_gap: f64,
}

impl ContinuityVerdict {
    /// Continuous overall: both sides continuous or vacuous.
    pub fn is_continuous(&self) -> bool {
        self.left != SideVerdict::Discontinuous && self.right != SideVerdict::Discontinuous
    }
}

/// Stabilization tolerances; order-1 limits settle tighter than nested
/// difference quotients, whose inputs already carry stabilization error.
#[derive(Debug, Clone, Copy)]
struct Tols {
    conv_rel: f64,
    conv_abs: f64,
    cross_rel: f64,
    cross_abs: f64,
    /// minimum |s - t| for generic samples (0 = no floor)
    gap_floor: f64,
}

impl Tols {
    fn order1() -> Self {
        Tols {
            conv_rel: config::CONV_REL,
            conv_abs: config::CONV_ABS,
            cross_rel: config::CROSS_SEQ_REL,
            cross_abs: config::CROSS_SEQ_ABS,
            gap_floor: 0.0,
        }
    }

    fn recursive(t: f64) -> Self {
        Tols {
            conv_rel: config::REC_CONV_REL,
            conv_abs: config::REC_CONV_ABS,
            cross_rel: config::REC_CROSS_REL,
            cross_abs: config::REC_CROSS_ABS,
            gap_floor: config::REC_GAP_FLOOR * t.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SeqOutcome {
    Converged(f64),
    Diverges(i8),
    NoLimit,
    Empty,
}

/// Run one sequence of samples through the quotient, watching for
/// stabilization or monotone escape. In refine mode the run continues past
/// the first stable window and reports the deepest quotient reached: jump
/// quotients have constant denominators, so they stay clean to full depth
/// and the extra samples buy precision for nested differencing.
fn run_sequence(
    label: &str,
    samples: &[f64],
    eval: &dyn Fn(f64) -> Option<f64>,
    evidence: &mut Vec<EvidenceRow>,
    tols: Tols,
    refine: bool,
) -> SeqOutcome {
    let mut qs: Vec<f64> = Vec::with_capacity(samples.len());
    let mut stable: Option<f64> = None;
    for &s in samples {
        let Some(q) = eval(s) else { continue };
        if !q.is_finite() {
            continue;
        }
        qs.push(q);
        evidence.push(EvidenceRow {
            sequence: label.to_string(),
            sample: s,
            value: q,
        });
        if let Some(out) = settled(&qs, tols) {
            match out {
                SeqOutcome::Converged(v) if refine => stable = Some(v),
                other => return other,
            }
        }
    }
    match settled(&qs, tols) {
        Some(out) => out,
        None => match stable {
            Some(v) => SeqOutcome::Converged(v),
            None if qs.is_empty() => SeqOutcome::Empty,
            None if qs.len() < config::CONV_WINDOW => SeqOutcome::NoLimit,
            None => escape_at_budget(&qs).unwrap_or(SeqOutcome::NoLimit),
        },
    }
}

fn settled(qs: &[f64], tols: Tols) -> Option<SeqOutcome> {
    let w = config::CONV_WINDOW;
    if qs.len() < w {
        return None;
    }
    let win = &qs[qs.len() - w..];
    let v = win[w - 1];
    let tol = (tols.conv_rel * v.abs()).max(tols.conv_abs);
    if win.iter().all(|q| (q - v).abs() <= tol) {
        return Some(SeqOutcome::Converged(v));
    }
    // hard escape: magnitude past DIVERGE_MAG, monotone over the window
    if v.abs() > config::DIVERGE_MAG && monotone_escape(win) {
        return Some(SeqOutcome::Diverges(if v >= 0.0 { 1 } else { -1 }));
    }
    None
}

fn monotone_escape(win: &[f64]) -> bool {
    let sign = win[win.len() - 1].signum();
    win.windows(2).all(|p| p[1].abs() >= p[0].abs()) && win.iter().all(|q| q.signum() == sign)
}

/// Sustained geometric escape through the whole sample budget. Jump masses
/// below the f64 subnormal floor vanish from the representation, so limits
/// escaping along a family can never reach `DIVERGE_MAG`; a sequence whose
/// magnitude keeps multiplying to the end of the budget is divergent too.
fn escape_at_budget(qs: &[f64]) -> Option<SeqOutcome> {
    let w = config::CONV_WINDOW;
    if qs.len() < w {
        return None;
    }
    let win = &qs[qs.len() - w..];
    let last = win[w - 1];
    if monotone_escape(win)
        && last.abs() >= 1.5 * win[w - 2].abs()
        && last.abs() >= 2.0 * win[0].abs()
        && last.abs() >= 1e2
    {
        Some(SeqOutcome::Diverges(if last >= 0.0 { 1 } else { -1 }))
    } else {
        None
    }
}

/// Merge per-sequence outcomes into one verdict.
fn combine(outcomes: &[SeqOutcome], tols: Tols) -> Verdict {
    let live: Vec<&SeqOutcome> = outcomes.iter().filter(|o| **o != SeqOutcome::Empty).collect();
    if live.is_empty() {
        return Verdict::NotApplicable;
    }
    if let Some(SeqOutcome::Diverges(s)) = live
        .iter()
        .find(|o| matches!(o, SeqOutcome::Diverges(_)))
    {
        return Verdict::Diverges(*s);
    }
    let mut values = Vec::new();
    for o in &live {
        match o {
            SeqOutcome::Converged(v) => values.push(*v),
            _ => return Verdict::NoLimit,
        }
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = (tols.cross_rel * scale).max(tols.cross_abs);
    let first = values[0];
    if values.iter().all(|v| (v - first).abs() <= tol) {
        Verdict::Converged(values.iter().sum::<f64>() / values.len() as f64)
    } else {
        Verdict::NoLimit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Left,
    Right,
}

impl Dir {
    fn sign(self) -> f64 {
        match self {
            Dir::Left => -1.0,
            Dir::Right => 1.0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Dir::Left => "left",
            Dir::Right => "right",
        }
    }
}

/// Geometric samples `t + dir * h0 * 2^-k`. The de-aliasing factor keeps
/// them off dyadic-rational jump positions.
fn generic_samples(g: &Derivator, t: f64, dom: Interval, dir: Dir, gap_floor: f64) -> Vec<f64> {
    let h0 = g.feature_distance(t, dom).min(1.0) / 4.0 * config::H0_DEALIAS;
    let mut out = Vec::with_capacity(config::MAX_SAMPLES);
    let mut h = h0;
    for _ in 0..config::MAX_SAMPLES {
        if h < gap_floor {
            break;
        }
        let s = t + dir.sign() * h;
        if s != t && dom.contains(s) {
            out.push(s);
        }
        h *= 0.5;
    }
    out
}

/// Family jump positions approaching the accumulation point `t`, with the
/// gap to `t` halving from sample to sample (indices grow geometrically).
/// Stops once the jump mass underflows to zero.
fn family_samples(fam: &JumpFamily, t: f64, dom: Interval) -> Vec<f64> {
    let mut out = Vec::with_capacity(config::MAX_SAMPLES);
    let mut gap = fam.position(fam.n_start).max(t) - fam.position(fam.n_start).min(t);
    let mut n = fam.n_start;
    for _ in 0..config::MAX_SAMPLES {
        // smallest index whose position is within `gap` of t
        while (fam.position(n) - t).abs() > gap && n < (1 << 50) {
            n += 1;
            let jump = ((fam.position.c / gap).powf(1.0 / fam.position.p)).floor();
            if jump.is_finite() && jump > n as f64 + 4.0 {
                n = jump as u64;
            }
        }
        if fam.mass(n) == 0.0 {
            break;
        }
        let pos = fam.position(n);
        if dom.contains(pos) && pos != t && out.last() != Some(&pos) {
            out.push(pos);
        }
        gap *= 0.5;
        if gap < f64::MIN_POSITIVE * 16.0 {
            break;
        }
    }
    out
}

/// Midpoints of the flat gaps between consecutive family jumps, approaching
/// the accumulation point `t` with geometrically shrinking gap. Only points
/// actually interior to a constancy component are kept.
fn gap_midpoint_samples(g: &Derivator, fam: &JumpFamily, t: f64, dom: Interval) -> Vec<f64> {
    let positions = family_samples(fam, t, dom);
    let mut out = Vec::with_capacity(positions.len());
    for pos in positions {
        if let Some(n) = fam.index_at(pos) {
            let next = fam.position(n + 1);
            let mid = 0.5 * (pos + next);
            if dom.contains(mid) && g.component_of(mid).is_some() {
                out.push(mid);
            }
        }
    }
    out
}

/// Geometric samples inside an adjacent constancy component `(t, v)` or
/// `(u, t)`, approaching `t`.
fn adjacent_component_samples(t: f64, other_end: f64, dom: Interval) -> Vec<f64> {
    let dir = if other_end > t { 1.0 } else { -1.0 };
    let span = (other_end - t).abs().min(1.0);
    let mut h = span / 4.0 * config::H0_DEALIAS;
    let mut out = Vec::with_capacity(config::MAX_SAMPLES);
    for _ in 0..config::MAX_SAMPLES {
        let s = t + dir * h;
        if s != t && dom.contains(s) {
            out.push(s);
        }
        h *= 0.5;
    }
    out
}

/// Shared limit kernel: stabilization-based limit of `F` along a designated
/// approach sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    /// geometric samples off no particular set
    Generic,
    /// exact family jump positions accumulating at t
    InJumpSet,
    /// inside constancy components accumulating at t
    InFlatSet,
    /// geometric samples, skipping exact jump positions
    OffJumpSet,
}

/// Which sides to approach from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Both,
}

impl Side {
    fn dirs(self) -> &'static [Dir] {
        match self {
            Side::Left => &[Dir::Left],
            Side::Right => &[Dir::Right],
            Side::Both => &[Dir::Left, Dir::Right],
        }
    }
}

/// Limit of `F(s)` as `s -> t` along the requested side and approach set.
/// `NotApplicable` when the approach set does not accumulate at `t` on the
/// requested side.
pub fn g_limit(
    f: PointFn,
    g: &Derivator,
    t: f64,
    dom: Interval,
    side: Side,
    approach: Approach,
) -> Result<LimitResult> {
    dom.require(t)?;
    let mut evidence = Vec::new();
    let mut outcomes = Vec::new();
    let eval = |s: f64| Some(f(s));
    for &dir in side.dirs() {
        if (dir == Dir::Left && t == dom.a()) || (dir == Dir::Right && t == dom.b()) {
            continue;
        }
        let fam_side = match dir {
            Dir::Left => FamilySide::LeftOf,
            Dir::Right => FamilySide::RightOf,
        };
        let samples: Vec<f64> = match approach {
            Approach::Generic => generic_samples(g, t, dom, dir, 0.0),
            Approach::OffJumpSet => generic_samples(g, t, dom, dir, 0.0)
                .into_iter()
                .filter(|&s| !g.in_jump_set(s))
                .collect(),
            Approach::InJumpSet => match g.family_accumulating_at(t, fam_side) {
                Some(fam) => family_samples(fam, t, dom),
                None => Vec::new(),
            },
            Approach::InFlatSet => {
                let mut v = match g.family_accumulating_at(t, fam_side) {
                    Some(fam) => gap_midpoint_samples(g, fam, t, dom),
                    None => Vec::new(),
                };
                if v.is_empty() {
                    let adj = match dir {
                        Dir::Right => g.component_starting_at(t),
                        Dir::Left => g.component_ending_at(t),
                    };
                    if let Some(end) = adj.filter(|e| e.is_finite()) {
                        v = adjacent_component_samples(t, end, dom);
                    }
                }
                v
            }
        };
        let label = format!("{}-{}", dir.label(), approach_label(approach));
        outcomes.push(run_sequence(&label, &samples, &eval, &mut evidence, Tols::order1(), false));
    }
    Ok(LimitResult {
        verdict: combine(&outcomes, Tols::order1()),
        evidence,
    })
}

fn approach_label(a: Approach) -> &'static str {
    match a {
        Approach::Generic => "generic",
        Approach::InJumpSet => "jumps",
        Approach::InFlatSet => "flat-gaps",
        Approach::OffJumpSet => "off-jumps",
    }
}

/// Numeric Stieltjes derivative of order 1..=3 at `t`, straight from the
/// limit definition with the side rules for `N_g` points and endpoints.
/// Higher orders recursively difference the next-lower numeric derivative.
pub fn numeric_g_derivative(
    f: PointFn,
    g: &Derivator,
    t: f64,
    dom: Interval,
    order: u32,
) -> Result<LimitResult> {
    if order == 0 || order > config::MAX_NUMERIC_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            max: config::MAX_NUMERIC_ORDER,
        });
    }
    dom.require(t)?;
    g.require_domain(dom, DomainMode::Derivative)?;
    let eval = |s: f64| Some(f(s));
    Ok(derivative_rec(&eval, g, t, dom, order))
}

fn derivative_rec(
    eval: &dyn Fn(f64) -> Option<f64>,
    g: &Derivator,
    t: f64,
    dom: Interval,
    order: u32,
) -> LimitResult {
    if order == 1 {
        return derivative_limit(eval, g, t, dom, Tols::order1());
    }
    let below = derivative_rec(eval, g, t, dom, order - 1);
    let at_t = match below.verdict {
        Verdict::Converged(v) => v,
        Verdict::Diverges(s) => return LimitResult { verdict: Verdict::Diverges(s), ..below },
        Verdict::NotApplicable => {
            return LimitResult { verdict: Verdict::NotApplicable, ..below }
        }
        Verdict::NoLimit => return LimitResult { verdict: Verdict::NoLimit, ..below },
    };
    let inner = move |s: f64| -> Option<f64> {
        if s == t {
            Some(at_t)
        } else {
            derivative_rec(eval, g, s, dom, order - 1)
                .verdict
                .converged_value()
        }
    };
    derivative_limit(&inner, g, t, dom, Tols::recursive(t))
}

/// Order-1 kernel: dispatch on the classification of `t`.
fn derivative_limit(
    eval: &dyn Fn(f64) -> Option<f64>,
    g: &Derivator,
    t: f64,
    dom: Interval,
    tols: Tols,
) -> LimitResult {
    let cls = classify_unchecked(g, t, dom);

    // flat interior: the derivative is taken at the component's right end
    if cls.in_cg {
        let star = cls.star;
        let mut res = derivative_limit(eval, g, star, dom, tols);
        res.evidence.insert(
            0,
            EvidenceRow {
                sequence: "delegate-to-star".into(),
                sample: star,
                value: f64::NAN,
            },
        );
        return res;
    }

    let Some(ft) = eval(t) else {
        return LimitResult::bare(Verdict::NoLimit);
    };

    let mut evidence = Vec::new();
    let mut outcomes = Vec::new();

    if cls.in_dg {
        // (f(t+) - f(t)) / Delta g(t): right-limit of f through the quotient
        let jump = g.jump_mass_at(t);
        let quot = |s: f64| eval(s).map(|fs| (fs - ft) / jump);
        let samples = generic_samples(g, t, dom, Dir::Right, tols.gap_floor);
        outcomes.push(run_sequence(
            "right-jump-quotient",
            &samples,
            &quot,
            &mut evidence,
            tols,
            true,
        ));
        return LimitResult {
            verdict: combine(&outcomes, tols),
            evidence,
        };
    }

    let gt = g.value(t);
    let quot = |s: f64| {
        let gs = g.value(s);
        if gs == gt {
            return None;
        }
        eval(s).map(|fs| (fs - ft) / (gs - gt))
    };

    for dir in active_dirs(&cls, t, dom) {
        let fam_side = match dir {
            Dir::Left => FamilySide::LeftOf,
            Dir::Right => FamilySide::RightOf,
        };
        let generic = generic_samples(g, t, dom, dir, tols.gap_floor);
        let label = format!("{}-generic", dir.label());
        outcomes.push(run_sequence(&label, &generic, &quot, &mut evidence, tols, false));

        let acc_d = match dir {
            Dir::Left => cls.acc_dg_left,
            Dir::Right => cls.acc_dg_right,
        };
        if acc_d {
            if let Some(fam) = g.family_accumulating_at(t, fam_side) {
                let samples = family_samples(fam, t, dom);
                let label = format!("{}-jumps", dir.label());
                outcomes.push(run_sequence(&label, &samples, &quot, &mut evidence, tols, false));
            }
        }
        let acc_c = match dir {
            Dir::Left => cls.acc_cg_left,
            Dir::Right => cls.acc_cg_right,
        };
        if acc_c {
            if let Some(fam) = g.family_accumulating_at(t, fam_side) {
                let samples = gap_midpoint_samples(g, fam, t, dom);
                let label = format!("{}-flat-gaps", dir.label());
                outcomes.push(run_sequence(&label, &samples, &quot, &mut evidence, tols, false));
            }
        }
    }

    LimitResult {
        verdict: combine(&outcomes, tols),
        evidence,
    }
}

/// Side rules: one-sided at `N_g^-`, `N_g^+`, and the domain endpoints.
fn active_dirs(cls: &PointClassification, t: f64, dom: Interval) -> Vec<Dir> {
    let mut dirs = Vec::with_capacity(2);
    if !cls.in_ng_plus && t != dom.a() {
        dirs.push(Dir::Left);
    }
    if !cls.in_ng_minus && t != dom.b() {
        dirs.push(Dir::Right);
    }
    dirs
}

/// The named limit conditions attached to conditional differentiability.
pub enum ConditionKind<'a> {
    /// `lim_{s -> t*, s in D_g} Delta g(s) / (g(s) - g(t)) = 0`; applicable
    /// when `t*` lies in `D1 ∪ D2 ∪ D3`.
    DeltaDiff,
    /// the flat-approach limit `lim_{s -> t*, s in C_g} (f(s) - f(t*)) /
    /// (g(s) - g(t*))`; applicable when `t*` lies in `C1 ∪ C2 ∪ C3`.
    StarLift(PointFn<'a>),
}

/// The conditional-differentiability gate for a product `h * Delta g`:
/// `lim_{s -> t*, s in D_g} h(s) Delta g(s) / (g(s) - g(t))` along the
/// jump sequences accumulating at `t*`, with the usual side rules. With
/// `h = 1` this is the gate for `Delta g` itself. `NotApplicable` when
/// `t*` lies outside `D1 ∪ D2 ∪ D3`.
pub fn weighted_jump_tail_limit(
    h: PointFn,
    g: &Derivator,
    t: f64,
    dom: Interval,
) -> Result<LimitResult> {
    dom.require(t)?;
    let star = g.star(t, dom)?;
    let scls = classify_unchecked(g, star, dom);
    if !scls.in_d_sets() {
        return Ok(LimitResult::bare(Verdict::NotApplicable));
    }
    let gt = g.value(t);
    let quot = |s: f64| {
        let gs = g.value(s);
        if gs == gt {
            return None;
        }
        Some(h(s) * g.jump_mass_at(s) / (gs - gt))
    };
    let mut evidence = Vec::new();
    let mut outcomes = Vec::new();
    let sides: Vec<Dir> = if scls.in_d1 {
        vec![Dir::Left]
    } else if scls.in_d2 {
        vec![Dir::Right]
    } else {
        let mut v = Vec::new();
        if scls.acc_dg_left {
            v.push(Dir::Left);
        }
        if scls.acc_dg_right {
            v.push(Dir::Right);
        }
        v
    };
    for dir in sides {
        let fam_side = match dir {
            Dir::Left => FamilySide::LeftOf,
            Dir::Right => FamilySide::RightOf,
        };
        if let Some(fam) = g.family_accumulating_at(star, fam_side) {
            let samples = family_samples(fam, star, dom);
            let label = format!("{}-jumps", dir.label());
            outcomes.push(run_sequence(&label, &samples, &quot, &mut evidence, Tols::order1(), false));
        }
    }
    Ok(LimitResult {
        verdict: combine(&outcomes, Tols::order1()),
        evidence,
    })
}

/// Evaluate a named side condition at `t`. `NotApplicable` when the class
/// membership required by the condition fails.
pub fn check_condition(
    g: &Derivator,
    t: f64,
    dom: Interval,
    which: ConditionKind<'_>,
) -> Result<LimitResult> {
    dom.require(t)?;
    g.require_domain(dom, DomainMode::Derivative)?;
    let star = g.star(t, dom)?;
    let scls = classify_unchecked(g, star, dom);
    match which {
        ConditionKind::DeltaDiff => weighted_jump_tail_limit(&|_| 1.0, g, t, dom),
        ConditionKind::StarLift(f) => {
            if !scls.in_c_sets() {
                return Ok(LimitResult::bare(Verdict::NotApplicable));
            }
            let f_star = f(star);
            let g_star = g.value(star);
            let quot = move |s: f64| {
                let gs = g.value(s);
                if gs == g_star {
                    return None;
                }
                Some((f(s) - f_star) / (gs - g_star))
            };
            let mut evidence = Vec::new();
            let mut outcomes = Vec::new();
            let sides: Vec<Dir> = if scls.in_c1 {
                vec![Dir::Left]
            } else if scls.in_c2 {
                vec![Dir::Right]
            } else {
                let mut v = Vec::new();
                if scls.acc_cg_left {
                    v.push(Dir::Left);
                }
                if scls.acc_cg_right {
                    v.push(Dir::Right);
                }
                v
            };
            for dir in sides {
                let fam_side = match dir {
                    Dir::Left => FamilySide::LeftOf,
                    Dir::Right => FamilySide::RightOf,
                };
                let mut samples = match g.family_accumulating_at(star, fam_side) {
                    Some(fam) => gap_midpoint_samples(g, fam, star, dom),
                    None => Vec::new(),
                };
                if samples.is_empty() {
                    let adj = match dir {
                        Dir::Right => g.component_starting_at(star),
                        Dir::Left => g.component_ending_at(star),
                    };
                    if let Some(end) = adj.filter(|e| e.is_finite()) {
                        samples = adjacent_component_samples(star, end, dom);
                    }
                }
                let label = format!("{}-flat-gaps", dir.label());
                outcomes.push(run_sequence(&label, &samples, &quot, &mut evidence, Tols::order1(), false));
            }
            Ok(LimitResult {
                verdict: combine(&outcomes, Tols::order1()),
                evidence,
            })
        }
    }
}

/// Numeric g-continuity at `t`: samples `s` with `|g(s) - g(t)|` under a
/// shrinking threshold from a precomputed pool (geometric near-t batch,
/// jump positions, level-set landmarks, uniform grid) and watches
/// `sup |f(s) - f(t)|`.
pub fn numeric_g_continuity(
    f: PointFn,
    g: &Derivator,
    t: f64,
    dom: Interval,
) -> Result<ContinuityVerdict> {
    dom.require(t)?;
    let pool = continuity_pool(g, t, dom);
    let gt = g.value(t);
    let ft = f(t);
    let pre: Vec<(f64, f64, f64)> = pool.iter().map(|&s| (s, g.value(s), f(s))).collect();

    let tol = config::CONT_TOL * ft.abs().max(1.0);
    let mut sup_gap = 0.0f64;
    let mut side = |left: bool| -> SideVerdict {
        let delta = 0.5f64.powi(40);
        let mut sup = 0.0f64;
        let mut any = false;
        for &(s, gs, fs) in &pre {
            let on_side = if left { s < t } else { s > t };
            if !on_side {
                continue;
            }
            let gap = (gs - gt).abs();
            if gap < delta {
                any = true;
                sup = sup.max((fs - ft).abs());
            }
        }
        sup_gap = sup_gap.max(sup);
        if !any {
            SideVerdict::Vacuous
        } else if sup <= tol {
            SideVerdict::Continuous
        } else {
            SideVerdict::Discontinuous
        }
    };
    let left = side(true);
    let right = side(false);
    Ok(ContinuityVerdict {
        left,
        right,
        sup_gap,
    })
}

fn continuity_pool(g: &Derivator, t: f64, dom: Interval) -> Vec<f64> {
    let mut pool = Vec::new();
    let mut push = |s: f64| {
        if dom.contains(s) && s != t {
            pool.push(s);
        }
    };
    // geometric batch near t, down to the last representable offsets
    let h0 = g.feature_distance(t, dom).min(1.0) / 4.0 * config::H0_DEALIAS;
    let mut h = h0;
    for _ in 0..60 {
        push(t + h);
        push(t - h);
        h *= 0.5;
    }
    // all structural landmarks
    for a in g.atoms() {
        push(a.at);
        push(a.at - 0.5f64.powi(30));
    }
    for s in g.segments() {
        push(s.from);
    }
    for fam in g.families() {
        push(fam.accumulation);
        for n in fam.n_start..fam.n_start + 64 {
            push(fam.position(n));
        }
    }
    // the level set of g(t): same-g points qualify at every threshold
    if let Ok((lo, hi)) = g.level_set(t, dom) {
        if hi > lo {
            for k in 0..=8 {
                push(lo + (hi - lo) * k as f64 / 8.0);
            }
            push(lo + (hi - lo) * 1e-6);
        }
        push(lo);
        push(hi);
    }
    if let Ok(star) = g.star(t, dom) {
        push(star);
    }
    // uniform grid over the domain
    for i in 0..=config::GRID_POINTS {
        push(dom.a() + (dom.b() - dom.a()) * i as f64 / config::GRID_POINTS as f64);
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::fixtures::*;

    fn dom(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn delta_g(g: &Derivator) -> impl Fn(f64) -> f64 + '_ {
        move |t| g.evaluate(t).jump
    }

    #[test]
    fn delta_diff_limit_paper_g_is_zero() {
        // the displayed computation: quotient 2^-n / (1/n + 2^-n) -> 0
        let g = paper_g();
        let r = check_condition(&g, 0.0, dom(-1.0, 2.0), ConditionKind::DeltaDiff).unwrap();
        match r.verdict {
            Verdict::Converged(v) => assert!(v.abs() <= 1e-6, "{v}"),
            other => panic!("expected convergence, got {other:?}"),
        }
        let used = r.evidence.iter().filter(|e| e.sequence.contains("jumps")).count();
        assert!(used <= 60, "family terms used: {used}");
    }

    #[test]
    fn delta_diff_limit_gtilde_is_one() {
        // quotient 2^-n / 2^-n = 1 along the family
        let g = gtilde();
        let r = check_condition(&g, 0.0, dom(-1.0, 2.0), ConditionKind::DeltaDiff).unwrap();
        match r.verdict {
            Verdict::Converged(v) => assert!((v - 1.0).abs() <= 1e-6, "{v}"),
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn delta_diff_not_applicable_off_the_sets() {
        let g = paper_g();
        let r = check_condition(&g, 0.7, dom(-1.0, 2.0), ConditionKind::DeltaDiff).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn delta_g_derivative_matches_signed_indicator() {
        // (Delta g)'_g(t) = -chi_{D_g}(t*): the sign is settled numerically
        let g = paper_g();
        let d = dom(-1.0, 2.0);
        let f = delta_g(&g);
        for (t, expect) in [(0.0, 0.0), (0.3, 0.0), (0.5, -1.0), (0.2, -1.0), (0.7, 0.0)] {
            let r = numeric_g_derivative(&f, &g, t, d, 1).unwrap();
            match r.verdict {
                Verdict::Converged(v) => {
                    assert!((v - expect).abs() < 1e-5, "t={t}: {v} vs {expect}")
                }
                other => panic!("t={t}: {other:?}"),
            }
        }
    }

    #[test]
    fn second_derivative_of_delta_g_diverges_at_zero() {
        let g = paper_g();
        let f = delta_g(&g);
        let r = numeric_g_derivative(&f, &g, 0.0, dom(-1.0, 2.0), 2).unwrap();
        match r.verdict {
            Verdict::Diverges(_) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn order_cap_enforced() {
        let g = identity();
        let f = |t: f64| t;
        assert!(numeric_g_derivative(&f, &g, 0.5, dom(0.0, 1.0), 4).is_err());
        assert!(numeric_g_derivative(&f, &g, 0.5, dom(0.0, 1.0), 0).is_err());
    }

    #[test]
    fn flat_gap_indicator_not_differentiable_at_zero() {
        // diverges along the flat gaps even though every jump sample is 0
        let g = gtilde();
        let f = flat_gap_indicator(&g);
        let r = numeric_g_derivative(&f, &g, 0.0, dom(-1.0, 2.0), 1).unwrap();
        match r.verdict {
            Verdict::Diverges(s) => assert_eq!(s, 1),
            Verdict::NoLimit => {}
            other => panic!("expected divergence or no-limit, got {other:?}"),
        }
        // while its star-lift is identically zero
        let fs = |t: f64| {
            let star = g.star(t, dom(-1.0, 2.0)).unwrap();
            f(star)
        };
        let r = numeric_g_derivative(&fs, &g, 0.0, dom(-1.0, 2.0), 1).unwrap();
        match r.verdict {
            Verdict::Converged(v) => assert!(v.abs() <= 1e-9, "{v}"),
            other => panic!("expected converged(0), got {other:?}"),
        }
    }

    #[test]
    fn star_lift_condition_blows_up_for_flat_gap_indicator() {
        let g = gtilde();
        let f = flat_gap_indicator(&g);
        let r = check_condition(&g, 0.0, dom(-1.0, 2.0), ConditionKind::StarLift(&f)).unwrap();
        assert!(matches!(r.verdict, Verdict::Diverges(1) | Verdict::NoLimit));
    }

    #[test]
    fn classical_derivatives_via_identity() {
        let g = identity();
        let d = dom(-2.0, 2.0);
        let f = |t: f64| t * t;
        for t in [-1.5, -0.3, 0.0, 0.7, 1.9] {
            let r = numeric_g_derivative(&f, &g, t, d, 1).unwrap();
            match r.verdict {
                Verdict::Converged(v) => assert!((v - 2.0 * t).abs() < 1e-6, "t={t}: {v}"),
                other => panic!("{other:?}"),
            }
        }
        let r = numeric_g_derivative(&f, &g, 0.5, d, 2).unwrap();
        match r.verdict {
            Verdict::Converged(v) => assert!((v - 2.0).abs() < 1e-5, "{v}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derivative_tower_of_g_squared_at_a_jump() {
        // orders 1..3 of g^2 at t = 1/2 on paper g: 1.75, 1, 4
        let g = paper_g();
        let d = dom(-1.0, 2.0);
        let f = |t: f64| g.value(t) * g.value(t);
        let expect = [1.75, 1.0, 4.0];
        for (order, want) in (1..=3u32).zip(expect) {
            let r = numeric_g_derivative(&f, &g, 0.5, d, order).unwrap();
            match r.verdict {
                Verdict::Converged(v) => assert!(
                    (v - want).abs() <= 1e-4 * want.abs(),
                    "order {order}: {v} vs {want}"
                ),
                other => panic!("order {order}: {other:?}"),
            }
        }
    }

    #[test]
    fn g_limit_kernel() {
        let g = paper_g();
        let d = dom(-1.0, 2.0);
        // Delta g along the jumps accumulating at 0 tends to 0 (regulated)
        let f = delta_g(&g);
        let r = g_limit(&f, &g, 0.0, d, Side::Right, Approach::InJumpSet).unwrap();
        assert!(r.verdict.is_converged_to(0.0, 1e-9));
        // a constant has itself as limit along any approach
        let c = |_: f64| 5.0;
        let r = g_limit(&c, &g, 0.3, d, Side::Both, Approach::Generic).unwrap();
        assert!(r.verdict.is_converged_to(5.0, 1e-12));
        // 1/(g(s) - g(0)) blows up along the jumps of gtilde
        let gt = gtilde();
        let g0 = gt.value(0.0);
        let blow = |s: f64| 1.0 / (gt.value(s) - g0);
        let r = g_limit(&blow, &gt, 0.0, d, Side::Right, Approach::InJumpSet).unwrap();
        assert_eq!(r.verdict, Verdict::Diverges(1));
        // the flat set does not accumulate at interior points of paper g
        let r = g_limit(&f, &g, 0.7, d, Side::Both, Approach::InFlatSet).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn continuity_of_delta_g() {
        let g = paper_g();
        let d = dom(-1.0, 2.0);
        let f = delta_g(&g);
        // discontinuous from the left at a jump (1/2 lies in A_g)
        let v = numeric_g_continuity(&f, &g, 0.5, d).unwrap();
        assert_eq!(v.left, SideVerdict::Discontinuous);
        assert!(!v.is_continuous());
        // continuous at a point with trivial level set
        let v = numeric_g_continuity(&f, &g, 0.7, d).unwrap();
        assert!(v.is_continuous());
    }

    #[test]
    fn continuity_of_starred_delta_on_a_flat_gap() {
        // Delta g* is g-continuous at 0.3 for gtilde (0.3 lies in H_g)
        let g = gtilde();
        let d = dom(-1.0, 2.0);
        let f = |t: f64| {
            let star = g.star(t, d).unwrap();
            g.evaluate(star).jump
        };
        let v = numeric_g_continuity(&f, &g, 0.3, d).unwrap();
        assert!(v.is_continuous(), "{v:?}");
        // but Delta g itself is not (0.3 is g-close to the jump at 1/3)
        let fd = delta_g(&g);
        let v = numeric_g_continuity(&fd, &g, 0.3, d).unwrap();
        assert!(!v.is_continuous(), "{v:?}");
    }

    #[test]
    fn evidence_rows_carry_sequences() {
        let g = paper_g();
        let r = check_condition(&g, 0.0, dom(-1.0, 2.0), ConditionKind::DeltaDiff).unwrap();
        assert!(!r.evidence.is_empty());
        assert!(r.evidence.iter().all(|e| e.sequence == "right-jumps"));
    }
}
