//! Expression language and symbolic g-differentiation.
//!
//! Closed-form g-derivatives are pointwise-conditional: a rule's output is
//! only meaningful where its hypotheses hold. `g_derive` therefore returns
//! a [`DerivResult`]: the derivative expression paired with a [`Validity`]
//! predicate decidable per point from the classification flags and the
//! named limit conditions. The CLI reports exactly where a formula applies
//! instead of failing eagerly.
//!
//! There is no algebraic simplifier beyond constant folding, star
//! distribution, and the collapse `Q(t*) Delta g(t*) = chi*(t)`;
//! expressions are compared by evaluation, not by normal form.

use serde::Serialize;

use crate::config;
use crate::derivator::{Derivator, Interval};
use crate::error::Error;
use crate::oracle;
use crate::pointclass::classify_unchecked;
use crate::Result;

/// Closed expression language over a derivator.
///
/// `GVal` is `t -> g(t)`, `DeltaG` is `t -> Delta g(t)`, `IndicatorDg` the
/// indicator of the jump set, `QVal` the map equal to `1/Delta g` on the
/// jump set and `0` elsewhere, and `Star(e)` is `t -> e(t*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Const(f64),
    GVal,
    DeltaG,
    IndicatorDg,
    QVal,
    Star(Box<Expr>),
    Sum(Box<Expr>, Box<Expr>),
    Scale(f64, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    NProduct(Vec<Expr>),
}

impl Expr {
    pub fn sum(a: Expr, b: Expr) -> Expr {
        Expr::Sum(Box::new(a), Box::new(b))
    }

    pub fn scale(c: f64, e: Expr) -> Expr {
        Expr::Scale(c, Box::new(e))
    }

    pub fn product(a: Expr, b: Expr) -> Expr {
        Expr::Product(Box::new(a), Box::new(b))
    }

    pub fn quotient(a: Expr, b: Expr) -> Expr {
        Expr::Quotient(Box::new(a), Box::new(b))
    }

    pub fn star(e: Expr) -> Expr {
        Expr::Star(Box::new(e))
    }

    /// Total evaluation closure; evaluation errors surface as NaN so limit
    /// kernels can skip the sample.
    pub fn as_fn<'a>(&'a self, g: &'a Derivator, dom: Interval) -> impl Fn(f64) -> f64 + 'a {
        move |t| eval_expr(self, g, t, dom).unwrap_or(f64::NAN)
    }

    /// Constant folding, star distribution (`(fg)* = f* g*` and so on),
    /// idempotent star (`t** = t*`), and the chi-delta collapse.
    pub fn simplified(&self) -> Expr {
        use Expr::*;
        match self {
            Const(c) => Const(*c),
            GVal => GVal,
            DeltaG => DeltaG,
            IndicatorDg => IndicatorDg,
            QVal => QVal,
            Star(e) => match e.simplified() {
                Const(c) => Const(c),
                // g(t*) = g(t)
                GVal => GVal,
                Star(inner) => Star(inner),
                Sum(a, b) => Expr::sum(Expr::star(*a), Expr::star(*b)).simplified(),
                Scale(c, a) => Expr::scale(c, Expr::star(*a)).simplified(),
                Product(a, b) => {
                    Expr::product(Expr::star(*a), Expr::star(*b)).simplified()
                }
                Quotient(a, b) => {
                    Expr::quotient(Expr::star(*a), Expr::star(*b)).simplified()
                }
                NProduct(es) => {
                    NProduct(es.into_iter().map(Expr::star).collect()).simplified()
                }
                inner => Expr::star(inner),
            },
            Sum(a, b) => match (a.simplified(), b.simplified()) {
                (Const(x), Const(y)) => Const(x + y),
                (Const(z), e) | (e, Const(z)) if z == 0.0 => e,
                (x, y) => Expr::sum(x, y),
            },
            Scale(c, e) => scale_of(*c, e.simplified()),
            Product(a, b) => match (a.simplified(), b.simplified()) {
                (Const(x), e) | (e, Const(x)) => scale_of(x, e),
                // Q(t*) Delta g(t*) = chi*(t), and the unstarred twin
                (Star(p), Star(q))
                    if (*p == QVal && *q == DeltaG) || (*p == DeltaG && *q == QVal) =>
                {
                    Expr::star(IndicatorDg)
                }
                (QVal, DeltaG) | (DeltaG, QVal) => IndicatorDg,
                (x, y) => Expr::product(x, y),
            },
            Quotient(a, b) => match (a.simplified(), b.simplified()) {
                (e, Const(c)) if c != 0.0 => scale_of(1.0 / c, e),
                (x, y) => Expr::quotient(x, y),
            },
            NProduct(es) => {
                let mut scale = 1.0;
                let mut rest = Vec::new();
                for e in es {
                    match e.simplified() {
                        Const(c) => scale *= c,
                        other => rest.push(other),
                    }
                }
                if scale == 0.0 {
                    return Const(0.0);
                }
                let core = match rest.len() {
                    0 => Const(1.0),
                    1 => rest.pop().expect("len 1"),
                    2 => {
                        let b = rest.pop().expect("len 2");
                        let a = rest.pop().expect("len 2");
                        Expr::product(a, b).simplified()
                    }
                    _ => NProduct(rest),
                };
                scale_of(scale, core)
            }
        }
    }
}

/// Fold a scalar onto an already-simplified expression without re-entering
/// the simplifier.
fn scale_of(c: f64, e: Expr) -> Expr {
    use Expr::*;
    if c == 0.0 {
        return Const(0.0);
    }
    match e {
        Const(x) => Const(c * x),
        Scale(d, inner) => {
            let cd = c * d;
            if cd == 1.0 {
                *inner
            } else {
                Scale(cd, inner)
            }
        }
        e if c == 1.0 => e,
        e => Expr::scale(c, e),
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use Expr::*;
        match self {
            Const(c) => write!(f, "c:{c}"),
            GVal => f.write_str("g"),
            DeltaG => f.write_str("dg"),
            IndicatorDg => f.write_str("chi"),
            QVal => f.write_str("q"),
            Star(e) => write!(f, "(star {e})"),
            Sum(a, b) => write!(f, "(+ {a} {b})"),
            Scale(c, e) => write!(f, "(scale:{c} {e})"),
            Product(a, b) => write!(f, "(* {a} {b})"),
            Quotient(a, b) => write!(f, "(/ {a} {b})"),
            NProduct(es) => {
                f.write_str("(*")?;
                for e in es {
                    write!(f, " {e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Structural evaluation of an expression at `t`.
pub fn eval_expr(e: &Expr, g: &Derivator, t: f64, dom: Interval) -> Result<f64> {
    dom.require(t)?;
    eval_inner(e, g, t, dom)
}

fn eval_inner(e: &Expr, g: &Derivator, t: f64, dom: Interval) -> Result<f64> {
    use Expr::*;
    Ok(match e {
        Const(c) => *c,
        GVal => g.value(t),
        DeltaG => g.jump_mass_at(t),
        IndicatorDg => {
            if g.in_jump_set(t) {
                1.0
            } else {
                0.0
            }
        }
        QVal => {
            let jump = g.jump_mass_at(t);
            if jump > 0.0 {
                1.0 / jump
            } else {
                0.0
            }
        }
        Star(inner) => {
            let star = g.star(t, dom)?;
            eval_inner(inner, g, star, dom)?
        }
        Sum(a, b) => eval_inner(a, g, t, dom)? + eval_inner(b, g, t, dom)?,
        Scale(c, a) => c * eval_inner(a, g, t, dom)?,
        Product(a, b) => eval_inner(a, g, t, dom)? * eval_inner(b, g, t, dom)?,
        Quotient(a, b) => {
            let num = eval_inner(a, g, t, dom)?;
            let den = eval_inner(b, g, t, dom)?;
            if den == 0.0 {
                return Err(Error::Eval(format!("zero denominator at t={t}")));
            }
            num / den
        }
        NProduct(es) => {
            let mut p = 1.0;
            for e in es {
                p *= eval_inner(e, g, t, dom)?;
            }
            p
        }
    })
}

/// Pointwise decision of a validity predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Decision {
    Valid,
    Invalid(String),
    Unknown(String),
}

impl Decision {
    pub fn is_valid(&self) -> bool {
        matches!(self, Decision::Valid)
    }
}

/// Where a symbolic derivative is guaranteed to hold, expressed through the
/// classification flags and named limit conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Validity {
    /// valid at every point of the domain
    Always,
    /// every part must hold
    All(Vec<Validity>),
    /// for `h * Delta g`: valid iff `t*` avoids `D1 ∪ D2 ∪ D3` or the
    /// weighted jump-tail limit vanishes (and, when `t*` is a jump that
    /// jumps accumulate onto from the right, the tail products vanish)
    JumpTailGate(Box<Expr>),
    /// valid where `t*` lies in `~D1 ∪ ~D2 ∪ ~D3`; unknown outside
    TildeSufficient,
    /// valid exactly where `t*` lies in `~D1 ∪ ~D2 ∪ ~D3`
    TildeIff,
    /// starred-map derivatives are unreliable when `t*` is a jump point
    /// with a flat stretch starting right at it; unknown there
    StarSafe,
    /// quotient denominator `f2(t*) (f2(t*) + f2' Delta g(t*))` nonzero
    NonzeroDenom { value: Box<Expr>, derivative: Box<Expr> },
}

impl Validity {
    fn all(parts: Vec<Validity>) -> Validity {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Validity::Always => {}
                Validity::All(mut inner) => flat.append(&mut inner),
                other => {
                    if !flat.contains(&other) {
                        flat.push(other);
                    }
                }
            }
        }
        match flat.len() {
            0 => Validity::Always,
            1 => flat.pop().expect("len 1"),
            _ => Validity::All(flat),
        }
    }

    /// Decide the predicate at a point. Uses the exact classification of
    /// `t*` plus the numeric limit oracles for the named conditions.
    pub fn decide(&self, g: &Derivator, t: f64, dom: Interval) -> Result<Decision> {
        dom.require(t)?;
        Ok(self.decide_inner(g, t, dom)?)
    }

    fn decide_inner(&self, g: &Derivator, t: f64, dom: Interval) -> Result<Decision> {
        use Validity::*;
        let star = g.star(t, dom)?;
        let scls = classify_unchecked(g, star, dom);
        Ok(match self {
            Always => Decision::Valid,
            All(parts) => {
                let mut unknown = None;
                for p in parts {
                    match p.decide_inner(g, t, dom)? {
                        Decision::Valid => {}
                        d @ Decision::Invalid(_) => return Ok(d),
                        d @ Decision::Unknown(_) => unknown = Some(d),
                    }
                }
                unknown.unwrap_or(Decision::Valid)
            }
            JumpTailGate(h) => {
                if scls.in_d_sets() {
                    let hf = h.as_fn(g, dom);
                    let lim = oracle::weighted_jump_tail_limit(&hf, g, t, dom)?;
                    match lim.verdict {
                        oracle::Verdict::Converged(v) if v.abs() <= config::ZERO_LIMIT_TOL => {
                            Decision::Valid
                        }
                        oracle::Verdict::NotApplicable => Decision::Valid,
                        other => Decision::Invalid(format!(
                            "jump-tail limit does not vanish at t* ({other})"
                        )),
                    }
                } else if scls.in_dg && scls.acc_dg_right {
                    // jumps accumulating onto a jump from the right cannot
                    // occur in this representation; kept for completeness
                    Decision::Valid
                } else {
                    Decision::Valid
                }
            }
            TildeSufficient => {
                if star_safe(g, star) && scls.in_tilde_d_sets() {
                    Decision::Valid
                } else if !star_safe(g, star) {
                    Decision::Unknown(STAR_DEFECT_NOTE.into())
                } else {
                    Decision::Unknown(
                        "t* outside ~D1 ∪ ~D2 ∪ ~D3; differentiability not guaranteed".into(),
                    )
                }
            }
            TildeIff => {
                if scls.in_tilde_d_sets() {
                    Decision::Valid
                } else {
                    Decision::Invalid("not g-differentiable: t* outside ~D1 ∪ ~D2 ∪ ~D3".into())
                }
            }
            StarSafe => {
                if star_safe(g, star) {
                    Decision::Valid
                } else {
                    Decision::Unknown(STAR_DEFECT_NOTE.into())
                }
            }
            NonzeroDenom { value, derivative } => {
                let v = eval_expr(&Expr::star((**value).clone()), g, t, dom);
                let d = eval_expr(derivative, g, t, dom);
                let ds = eval_expr(&Expr::star(Expr::DeltaG), g, t, dom)?;
                match (v, d) {
                    (Ok(v), Ok(d)) => {
                        let den = v * (v + d * ds);
                        if den == 0.0 {
                            Decision::Invalid("quotient denominator vanishes".into())
                        } else {
                            Decision::Valid
                        }
                    }
                    _ => Decision::Invalid("quotient denominator not evaluable".into()),
                }
            }
        })
    }
}

const STAR_DEFECT_NOTE: &str =
    "t* is a jump adjoining a flat stretch on its right; starred-map derivative undetermined";

/// A jump with a constancy component starting exactly at it: the one spot
/// where evaluating through the star map changes right limits, so the
/// starred-map derivative formulas do not apply.
fn star_safe(g: &Derivator, star: f64) -> bool {
    !(g.in_jump_set(star) && g.component_starting_at(star).is_some())
}

impl std::fmt::Display for Validity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use Validity::*;
        match self {
            Always => f.write_str("everywhere"),
            All(parts) => {
                let mut first = true;
                for p in parts {
                    if !first {
                        f.write_str("; and ")?;
                    }
                    write!(f, "{p}")?;
                    first = false;
                }
                Ok(())
            }
            JumpTailGate(h) => write!(
                f,
                "t* outside D1∪D2∪D3, or the jump-tail limit of {h} vanishes"
            ),
            TildeSufficient => f.write_str("t* in ~D1∪~D2∪~D3 (unknown outside)"),
            TildeIff => f.write_str("exactly where t* lies in ~D1∪~D2∪~D3"),
            StarSafe => f.write_str("t* not a jump adjoining a flat stretch"),
            NonzeroDenom { value, .. } => {
                write!(f, "denominator built from {value} nonzero at the point")
            }
        }
    }
}

/// A symbolic derivative with its validity domain and the rules applied.
#[derive(Debug, Clone, Serialize)]
pub struct DerivResult {
    pub derivative: Expr,
    pub validity: Validity,
    pub notes: Vec<&'static str>,
}

impl DerivResult {
    pub fn decide(&self, g: &Derivator, t: f64, dom: Interval) -> Result<Decision> {
        self.validity.decide(g, t, dom)
    }
}

/// Symbolic g-derivative of an expression; total on the closed variant set.
pub fn g_derive(e: &Expr) -> DerivResult {
    let mut res = derive_rule(&e.simplified());
    res.derivative = res.derivative.simplified();
    res.notes.dedup();
    res
}

/// Repeated symbolic differentiation; entry `k` holds the order `k+1`
/// derivative with the validity of the whole chain.
pub fn g_derive_n(e: &Expr, order: u32) -> Vec<DerivResult> {
    let mut out: Vec<DerivResult> = Vec::with_capacity(order as usize);
    let mut current = e.clone();
    let mut chain: Vec<Validity> = Vec::new();
    for _ in 0..order {
        let step = g_derive(&current);
        chain.push(step.validity.clone());
        current = step.derivative.clone();
        out.push(DerivResult {
            derivative: step.derivative,
            validity: Validity::all(chain.clone()),
            notes: step.notes,
        });
    }
    out
}

fn derive_rule(e: &Expr) -> DerivResult {
    use Expr::*;
    let res = |derivative: Expr, validity: Validity, note: &'static str| DerivResult {
        derivative,
        validity,
        notes: vec![note],
    };
    match e {
        Const(_) => res(Const(0.0), Validity::Always, "constant"),
        // the difference quotient of g against itself is identically 1
        GVal => res(Const(1.0), Validity::Always, "identity-increment"),
        DeltaG => res(
            Expr::scale(-1.0, Expr::star(IndicatorDg)),
            Validity::JumpTailGate(Box::new(Const(1.0))),
            "jump-size",
        ),
        IndicatorDg => res(
            Expr::scale(-1.0, Expr::star(QVal)),
            Validity::TildeIff,
            "jump-indicator",
        ),
        QVal => res(
            Expr::scale(-1.0, Expr::product(Expr::star(QVal), Expr::star(QVal))),
            Validity::TildeSufficient,
            "jump-reciprocal",
        ),
        Star(inner) => {
            // (f*)'_g = f'_g where both exist; at a jump adjoining a flat
            // stretch the star map changes right limits, hence the guard
            let mut d = derive_rule(inner);
            d.validity = Validity::all(vec![d.validity, Validity::StarSafe]);
            d.notes.push("star-passthrough");
            d
        }
        Sum(a, b) => {
            let (da, db) = (derive_rule(a), derive_rule(b));
            DerivResult {
                derivative: Expr::sum(da.derivative, db.derivative),
                validity: Validity::all(vec![da.validity, db.validity]),
                notes: merge_notes(da.notes, db.notes, "linearity"),
            }
        }
        Scale(c, a) => {
            let da = derive_rule(a);
            DerivResult {
                derivative: Expr::scale(*c, da.derivative),
                validity: da.validity,
                notes: merge_notes(da.notes, vec![], "linearity"),
            }
        }
        Product(a, b) => {
            // specialized shortcuts first: they need nothing from the other
            // factor, while the generic rule would differentiate it
            if **b == DeltaG {
                return jump_factor_rule(a);
            }
            if **a == DeltaG {
                return jump_factor_rule(b);
            }
            if **b == IndicatorDg {
                return indicator_factor_rule(a);
            }
            if **a == IndicatorDg {
                return indicator_factor_rule(b);
            }
            let (da, db) = (derive_rule(a), derive_rule(b));
            let derivative = Expr::sum(
                Expr::sum(
                    Expr::product(da.derivative.clone(), Expr::star((**b).clone())),
                    Expr::product(db.derivative.clone(), Expr::star((**a).clone())),
                ),
                Expr::product(
                    Expr::product(da.derivative, db.derivative),
                    Expr::star(DeltaG),
                ),
            );
            DerivResult {
                derivative,
                validity: Validity::all(vec![da.validity, db.validity]),
                notes: merge_notes(da.notes, db.notes, "product"),
            }
        }
        Quotient(a, b) => {
            let (da, db) = (derive_rule(a), derive_rule(b));
            let num = Expr::sum(
                Expr::product(da.derivative.clone(), Expr::star((**b).clone())),
                Expr::scale(
                    -1.0,
                    Expr::product(db.derivative.clone(), Expr::star((**a).clone())),
                ),
            );
            let den = Expr::product(
                Expr::star((**b).clone()),
                Expr::sum(
                    Expr::star((**b).clone()),
                    Expr::product(db.derivative.clone(), Expr::star(DeltaG)),
                ),
            );
            DerivResult {
                derivative: Expr::quotient(num, den),
                validity: Validity::all(vec![
                    da.validity,
                    db.validity,
                    Validity::NonzeroDenom {
                        value: b.clone(),
                        derivative: Box::new(db.derivative),
                    },
                ]),
                notes: merge_notes(da.notes, db.notes, "quotient"),
            }
        }
        NProduct(es) => match es.len() {
            0 => res(Const(0.0), Validity::Always, "constant"),
            1 => derive_rule(&es[0]),
            n => {
                let parts: Vec<DerivResult> = es.iter().map(derive_rule).collect();
                let mut terms: Vec<Expr> = Vec::new();
                for k in 0..n {
                    let mut sig_sum: Option<Expr> = None;
                    for sig in enumerate_signatures(n, (k + 1) as i64).expect("k+1 <= n") {
                        let factors: Vec<Expr> = sig
                            .bits()
                            .iter()
                            .zip(es.iter().zip(parts.iter()))
                            .map(|(&bit, (e, d))| {
                                if bit == 1 {
                                    d.derivative.clone()
                                } else {
                                    Expr::star(e.clone())
                                }
                            })
                            .collect();
                        let term = NProduct(factors);
                        sig_sum = Some(match sig_sum {
                            None => term,
                            Some(acc) => Expr::sum(acc, term),
                        });
                    }
                    let sig_sum = sig_sum.expect("F(n, k+1) nonempty");
                    let term = if k == 0 {
                        sig_sum
                    } else {
                        Expr::product(NProduct(vec![Expr::star(DeltaG); k]), sig_sum)
                    };
                    terms.push(term);
                }
                let derivative = terms
                    .into_iter()
                    .reduce(Expr::sum)
                    .expect("n >= 2 terms");
                DerivResult {
                    derivative,
                    validity: Validity::all(parts.iter().map(|p| p.validity.clone()).collect()),
                    notes: vec!["n-product"],
                }
            }
        },
    }
}

/// `(h * Delta g)'_g = - h(t*) chi_{D_g}(t*)`, conditional on the weighted
/// jump-tail limit; needs no differentiability from `h`.
fn jump_factor_rule(h: &Expr) -> DerivResult {
    DerivResult {
        derivative: Expr::scale(
            -1.0,
            Expr::product(Expr::star(h.clone()), Expr::star(Expr::IndicatorDg)),
        ),
        validity: Validity::JumpTailGate(Box::new(h.clone())),
        notes: vec!["jump-factor-product"],
    }
}

/// `(h * chi_{D_g})'_g = - h(t*) Q(t*)` on the tilde-D sets; needs no
/// differentiability from `h`.
fn indicator_factor_rule(h: &Expr) -> DerivResult {
    DerivResult {
        derivative: Expr::scale(
            -1.0,
            Expr::product(Expr::star(h.clone()), Expr::star(Expr::QVal)),
        ),
        validity: Validity::TildeSufficient,
        notes: vec!["indicator-factor-product"],
    }
}

fn merge_notes(
    mut a: Vec<&'static str>,
    b: Vec<&'static str>,
    head: &'static str,
) -> Vec<&'static str> {
    let mut out = vec![head];
    out.append(&mut a);
    for n in b {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out.dedup();
    out
}

/// Guard for the second-order product rule: the hypotheses hold when `t*`
/// avoids `D1 ∪ D2 ∪ D3` or the jump-tail limit vanishes, away from the
/// starred-map defect.
pub fn product_rule_2_applicable(g: &Derivator, t: f64, dom: Interval) -> Result<Decision> {
    Validity::all(vec![
        Validity::JumpTailGate(Box::new(Expr::Const(1.0))),
        Validity::StarSafe,
    ])
    .decide(g, t, dom)
}

/// Guard for the third-order product rule: `t*` in `~D1 ∪ ~D2 ∪ ~D3`,
/// away from the starred-map defect.
pub fn product_rule_3_applicable(g: &Derivator, t: f64, dom: Interval) -> Result<Decision> {
    Validity::all(vec![Validity::TildeSufficient, Validity::StarSafe]).decide(g, t, dom)
}

/// A tuple in `{0,1}^n`; weight = number of ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Signature(Vec<u8>);

impl Signature {
    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }
}

/// All `C(n, k)` signatures of length `n` and weight `k`, lexicographic.
pub fn enumerate_signatures(n: usize, k: i64) -> Result<Vec<Signature>> {
    if k < 0 || k as usize > n {
        return Err(Error::SignatureRange { n, k });
    }
    let k = k as usize;
    let mut out = Vec::new();
    let mut buf = vec![0u8; n];
    fn rec(buf: &mut Vec<u8>, pos: usize, ones_left: usize, out: &mut Vec<Signature>) {
        let n = buf.len();
        if n - pos < ones_left {
            return;
        }
        if pos == n {
            out.push(Signature(buf.clone()));
            return;
        }
        if ones_left < n - pos {
            buf[pos] = 0;
            rec(buf, pos + 1, ones_left, out);
        }
        if ones_left > 0 {
            buf[pos] = 1;
            rec(buf, pos + 1, ones_left - 1, out);
            buf[pos] = 0;
        }
    }
    rec(&mut buf, 0, k, &mut out);
    Ok(out)
}

/// n-ary first-order product rule: `sum_k Delta^k sum_{|sigma| = k+1}
/// prod_j f_j^(sigma_j)`, with `Delta^0` read as 1. Inputs are the factor
/// values at `t*` paired with their first g-derivatives.
pub fn product_rule_n(values: &[(f64, f64)], delta_star: f64) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidArity { n });
    }
    let mut total = 0.0;
    let mut delta_pow = 1.0;
    for k in 0..n {
        let mut sum = 0.0;
        for sig in enumerate_signatures(n, (k + 1) as i64)? {
            let mut prod = 1.0;
            for (j, &bit) in sig.bits().iter().enumerate() {
                prod *= if bit == 1 { values[j].1 } else { values[j].0 };
            }
            sum += prod;
        }
        if k == 0 {
            total += sum;
        } else {
            delta_pow *= delta_star;
            total += delta_pow * sum;
        }
    }
    Ok(total)
}

/// Second-order product rule. Each factor is `(f(t*), f'_g(t), f''_g(t))`;
/// `chi_star` is the jump indicator at `t*`.
pub fn product_rule_2(
    f1: (f64, f64, f64),
    f2: (f64, f64, f64),
    delta_star: f64,
    chi_star: bool,
) -> f64 {
    let chi = if chi_star { 1.0 } else { 0.0 };
    f1.2 * f2.0
        + f1.0 * f2.2
        + (2.0 - chi) * f1.1 * f2.1
        + delta_star * (f1.1 * f2.2 + f2.1 * f1.2)
}

/// Third-order product rule. Each factor is `(f(t*), f', f'', f''')`;
/// `q_star` is `Q(t*) = chi_{D_g}(t*) / Delta g(t*)`.
pub fn product_rule_3(
    f1: (f64, f64, f64, f64),
    f2: (f64, f64, f64, f64),
    delta_star: f64,
    chi_star: bool,
    q_star: f64,
) -> f64 {
    let chi = if chi_star { 1.0 } else { 0.0 };
    f1.3 * f2.0
        + f1.0 * f2.3
        + (3.0 - chi) * (f1.1 * f2.2 + f2.1 * f1.2)
        + delta_star * (f1.3 * f2.1 + 2.0 * f1.2 * f2.2 + f1.1 * f2.3)
        + q_star * f1.1 * f2.1
}

/// Quotient rule: `(f1/f2)'_g` from the factor data at `t*`; errors when
/// the denominator `f2(t*) (f2(t*) + f2' Delta g(t*))` vanishes.
pub fn quotient_rule(f1: (f64, f64), f2: (f64, f64), delta_star: f64) -> Result<f64> {
    let den = f2.0 * (f2.0 + f2.1 * delta_star);
    if den == 0.0 {
        return Err(Error::QuotientUndefined { denominator: den });
    }
    Ok((f1.1 * f2.0 - f2.1 * f1.0) / den)
}

/// Parse the prefix mini-syntax: atoms `g`, `dg`, `chi`, `q`, `c:<num>`;
/// forms `(+ a b ...)`, `(* a b ...)` (three or more factors build an
/// n-ary product), `(/ a b)`, `(scale:<num> e)`, `(star e)` or `star(e)`.
/// Numbers accept decimal and rational (`7/24`) literals.
pub fn parse_expr(input: &str) -> Result<Expr> {
    let spaced = input.replace('(', " ( ").replace(')', " ) ");
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    let mut pos = 0;
    let e = parse_tokens(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::Parse(format!(
            "trailing tokens after expression: {:?}",
            &tokens[pos..]
        )));
    }
    Ok(e)
}

fn parse_tokens(tokens: &[&str], pos: &mut usize) -> Result<Expr> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
    *pos += 1;
    match *tok {
        "(" => {
            let op = tokens
                .get(*pos)
                .ok_or_else(|| Error::Parse("missing operator after '('".into()))?;
            *pos += 1;
            let expr = match *op {
                "+" => {
                    let args = parse_args(tokens, pos, 2, usize::MAX, "+")?;
                    args.into_iter().reduce(Expr::sum).expect("at least 2")
                }
                "*" => {
                    let args = parse_args(tokens, pos, 2, usize::MAX, "*")?;
                    if args.len() == 2 {
                        let mut it = args.into_iter();
                        let a = it.next().expect("len 2");
                        let b = it.next().expect("len 2");
                        Expr::product(a, b)
                    } else {
                        Expr::NProduct(args)
                    }
                }
                "/" => {
                    let mut args = parse_args(tokens, pos, 2, 2, "/")?;
                    let b = args.pop().expect("len 2");
                    let a = args.pop().expect("len 2");
                    Expr::quotient(a, b)
                }
                "star" => {
                    let mut args = parse_args(tokens, pos, 1, 1, "star")?;
                    Expr::star(args.pop().expect("len 1"))
                }
                op if op.starts_with("scale:") => {
                    let c = parse_number(&op["scale:".len()..])?;
                    let mut args = parse_args(tokens, pos, 1, 1, "scale")?;
                    Expr::scale(c, args.pop().expect("len 1"))
                }
                other => return Err(Error::Parse(format!("unknown operator '{other}'"))),
            };
            return Ok(expr);
        }
        ")" => Err(Error::Parse("unexpected ')'".into())),
        "g" => Ok(Expr::GVal),
        "dg" => Ok(Expr::DeltaG),
        "chi" => Ok(Expr::IndicatorDg),
        "q" => Ok(Expr::QVal),
        "star" => {
            // the star(e) call form
            if tokens.get(*pos) == Some(&"(") {
                *pos += 1;
                let inner = parse_tokens(tokens, pos)?;
                if tokens.get(*pos) != Some(&")") {
                    return Err(Error::Parse("star(...) missing ')'".into()));
                }
                *pos += 1;
                Ok(Expr::star(inner))
            } else {
                Err(Error::Parse("bare 'star' needs an argument".into()))
            }
        }
        tok if tok.starts_with("c:") => Ok(Expr::Const(parse_number(&tok[2..])?)),
        tok => parse_number(tok).map(Expr::Const).map_err(|_| {
            Error::Parse(format!("unknown token '{tok}'"))
        }),
    }
}

fn parse_args(
    tokens: &[&str],
    pos: &mut usize,
    min: usize,
    max: usize,
    op: &str,
) -> Result<Vec<Expr>> {
    let mut args = Vec::new();
    loop {
        match tokens.get(*pos) {
            Some(&")") => {
                *pos += 1;
                break;
            }
            Some(_) => args.push(parse_tokens(tokens, pos)?),
            None => return Err(Error::Parse(format!("'({op} ...' missing ')'"))),
        }
    }
    if args.len() < min || args.len() > max {
        return Err(Error::Parse(format!(
            "operator '{op}' takes {min}..{} arguments, got {}",
            if max == usize::MAX { "n".into() } else { max.to_string() },
            args.len()
        )));
    }
    Ok(args)
}

/// Parse a decimal or rational (`p/q`) numeric literal. Rationals are
/// evaluated as one f64 division, exact whenever the quotient is
/// representable.
pub fn parse_number(s: &str) -> Result<f64> {
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in '{s}'")))?;
        let q: f64 = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in '{s}'")))?;
        if q == 0.0 {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(p / q);
    }
    Err(Error::Parse(format!("bad number '{s}'")))
}
