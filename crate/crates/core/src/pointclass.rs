//! Exact classification of a point into the structural sets of g-calculus.
//!
//! Membership in `C_g`, `D_g`, `N_g^-`, `N_g^+` is read off the piecewise
//! representation. Accumulation flags are decided symbolically: the only
//! accumulation points of `D_g` are family accumulation points, and `C_g`
//! can only accumulate at a point through an adjacent component or through
//! the chain of gaps between consecutive family jumps over a flat stretch.
//! Sampling plays no role here; limit-point membership is not robustly
//! decidable numerically.

use serde::Serialize;

use crate::derivator::{Derivator, DomainMode, FamilySide, Interval};
use crate::Result;

/// Full structural record of a point.
///
/// The one-sided sets follow the domain convention for g-derivatives:
/// at `t = a` every flag referring to the left side is false, at `t = b`
/// every flag referring to the right side is false.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointClassification {
    pub t: f64,
    /// interior of a constancy component of g
    pub in_cg: bool,
    /// jump point: `Delta g(t) > 0`
    pub in_dg: bool,
    /// left endpoint of a component, not a jump
    pub in_ng_minus: bool,
    /// right endpoint of a component, not a jump
    pub in_ng_plus: bool,
    /// the containing component `(a_n, b_n)` when `in_cg`
    pub component: Option<(f64, f64)>,
    /// t is an accumulation point of `D_g ∩ [a, t)`
    pub acc_dg_left: bool,
    /// t is an accumulation point of `D_g ∩ (t, b]`
    pub acc_dg_right: bool,
    /// t is an accumulation point of `C_g ∩ [a, t)`
    pub acc_cg_left: bool,
    /// t is an accumulation point of `C_g ∩ (t, b]`
    pub acc_cg_right: bool,
    /// D1: in `N_g^-` and `D_g` accumulates from the left
    pub in_d1: bool,
    /// D2: in `N_g^+` and `D_g` accumulates from the right
    pub in_d2: bool,
    /// D3: in none of the named sets and `D_g` accumulates at t
    pub in_d3: bool,
    /// ~D1: in `N_g^-` and `D_g` does not accumulate from the left
    pub in_td1: bool,
    /// ~D2: in `N_g^+ ∪ D_g` and `D_g` does not accumulate from the right
    pub in_td2: bool,
    /// ~D3: regular and `D_g` does not accumulate at t
    pub in_td3: bool,
    /// C1: in `N_g^-` and `C_g` accumulates from the left
    pub in_c1: bool,
    /// C2: in `N_g^+ ∪ D_g` and `C_g` accumulates from the right
    pub in_c2: bool,
    /// C3: regular and `C_g` accumulates at t
    pub in_c3: bool,
    /// the supremum of the level set of g(t) is a jump point
    pub in_ag: bool,
    /// t lies in `(s1, s2]` with `s1, s2` jumps and `(s1, s2)` flat
    pub in_hg: bool,
    /// the star map `t*`
    pub star: f64,
    /// infimum of `{s in dom : g(s) = g(t)}`
    pub level_inf: f64,
    /// supremum of `{s in dom : g(s) = g(t)}`
    pub level_sup: f64,
}

impl PointClassification {
    /// t belongs to none of `C_g`, `D_g`, `N_g^-`, `N_g^+`.
    pub fn is_regular(&self) -> bool {
        !self.in_cg && !self.in_dg && !self.in_ng_minus && !self.in_ng_plus
    }

    /// Membership in `D1 ∪ D2 ∪ D3`.
    pub fn in_d_sets(&self) -> bool {
        self.in_d1 || self.in_d2 || self.in_d3
    }

    /// Membership in `~D1 ∪ ~D2 ∪ ~D3`.
    pub fn in_tilde_d_sets(&self) -> bool {
        self.in_td1 || self.in_td2 || self.in_td3
    }

    /// Membership in `C1 ∪ C2 ∪ C3`.
    pub fn in_c_sets(&self) -> bool {
        self.in_c1 || self.in_c2 || self.in_c3
    }
}

/// Classify `t` within `dom`. Requires `t ∈ dom` and a domain satisfying the
/// derivative-mode endpoint conditions.
pub fn classify(g: &Derivator, t: f64, dom: Interval) -> Result<PointClassification> {
    dom.require(t)?;
    g.require_domain(dom, DomainMode::Derivative)?;
    Ok(classify_unchecked(g, t, dom))
}

/// Classification without the domain-validity precondition; used internally
/// where the caller has already validated, and by diagnostics.
pub fn classify_unchecked(g: &Derivator, t: f64, dom: Interval) -> PointClassification {
    let (a, b) = (dom.a(), dom.b());
    let in_dg = g.in_jump_set(t);
    let component = g.component_of(t);
    let in_cg = component.is_some();
    let in_ng_minus = !in_dg && !in_cg && g.component_starting_at(t).is_some();
    let in_ng_plus = !in_dg && !in_cg && g.component_ending_at(t).is_some();

    // D_g accumulates at t only through a family whose accumulation is t.
    let acc_dg_left = t > a && g.family_accumulating_at(t, FamilySide::LeftOf).is_some();
    let acc_dg_right = t < b && g.family_accumulating_at(t, FamilySide::RightOf).is_some();

    // C_g accumulates from a side through an adjacent component or through
    // the gaps between consecutive family jumps over a flat stretch.
    let acc_cg_left = t > a
        && (g.component_ending_at(t).is_some()
            || (g.family_accumulating_at(t, FamilySide::LeftOf).is_some()
                && g.slope_left_of(t) == 0.0));
    let acc_cg_right = t < b
        && (g.component_starting_at(t).is_some()
            || (g.family_accumulating_at(t, FamilySide::RightOf).is_some()
                && g.slope_right_of(t) == 0.0));

    let regular = !in_cg && !in_dg && !in_ng_minus && !in_ng_plus;

    let in_d1 = in_ng_minus && acc_dg_left;
    let in_d2 = in_ng_plus && acc_dg_right;
    let in_d3 = regular && (acc_dg_left || acc_dg_right);
    let in_td1 = in_ng_minus && !acc_dg_left;
    let in_td2 = (in_ng_plus || in_dg) && !acc_dg_right;
    let in_td3 = regular && !(acc_dg_left || acc_dg_right);
    let in_c1 = in_ng_minus && acc_cg_left;
    let in_c2 = (in_ng_plus || in_dg) && acc_cg_right;
    let in_c3 = regular && (acc_cg_left || acc_cg_right);

    let star = g.star(t, dom).expect("t in dom");
    let (level_inf, level_sup) = g.level_set(t, dom).expect("t in dom");
    let in_ag = g.in_jump_set(level_sup);

    let in_hg = if let Some((u, v)) = component {
        u.is_finite() && v.is_finite() && g.in_jump_set(u) && g.in_jump_set(v)
    } else if in_dg {
        match g.component_ending_at(t) {
            Some(u) => u.is_finite() && g.in_jump_set(u),
            None => false,
        }
    } else {
        false
    };

    PointClassification {
        t,
        in_cg,
        in_dg,
        in_ng_minus,
        in_ng_plus,
        component,
        acc_dg_left,
        acc_dg_right,
        acc_cg_left,
        acc_cg_right,
        in_d1,
        in_d2,
        in_d3,
        in_td1,
        in_td2,
        in_td3,
        in_c1,
        in_c2,
        in_c3,
        in_ag,
        in_hg,
        star,
        level_inf,
        level_sup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::fixtures::*;

    fn dom(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn paper_g_at_zero() {
        let g = paper_g();
        let c = classify(&g, 0.0, dom(-1.0, 2.0)).unwrap();
        assert!(c.in_d3 && !c.in_dg && c.acc_dg_right && !c.in_ag);
        assert!(!c.in_d1 && !c.in_d2);
        assert!(!c.acc_cg_right, "slope is positive, no flat chain");
        assert!(c.is_regular());
        assert_eq!(c.star, 0.0);
    }

    #[test]
    fn gtilde_at_zero() {
        let g = gtilde();
        let c = classify(&g, 0.0, dom(-1.0, 2.0)).unwrap();
        assert!(c.in_ng_plus && c.in_d2);
        assert!(!c.in_d1 && !c.in_d3);
        assert!(c.acc_dg_right && c.acc_cg_right && c.acc_cg_left);
        assert!(c.in_c2, "0 is in C2 for gtilde");
        assert_eq!(c.star, 0.0);
        assert!(!c.in_ag, "level sup of 0 is 0, not a jump");
    }

    #[test]
    fn g_a_at_one() {
        let g = g_a();
        let c = classify(&g, 1.0, dom(-2.0, 3.0)).unwrap();
        assert!(c.in_cg);
        assert_eq!(c.component, Some((0.0, 2.0)));
        assert_eq!(c.star, 2.0);
        assert!(c.in_ag && c.in_hg);
        assert_eq!((c.level_inf, c.level_sup), (0.0, 2.0));
    }

    #[test]
    fn g_a_set_tables() {
        // A_g = {-1} ∪ [0, 2], H_g = (0, 2] over [-2, 3]
        let g = g_a();
        let d = dom(-2.0, 3.0);
        for k in -2000..=3000i64 {
            let t = k as f64 / 1000.0;
            let c = classify(&g, t, d).unwrap();
            let expect_ag = t == -1.0 || (0.0 <= t && t <= 2.0);
            let expect_hg = 0.0 < t && t <= 2.0;
            assert_eq!(c.in_ag, expect_ag, "A_g mismatch at {t}");
            assert_eq!(c.in_hg, expect_hg, "H_g mismatch at {t}");
        }
    }

    #[test]
    fn paper_g_ag_is_jump_set() {
        let g = paper_g();
        let d = dom(-1.0, 2.0);
        for k in -1000..=2000i64 {
            let t = k as f64 / 1000.0;
            let c = classify(&g, t, d).unwrap();
            assert_eq!(c.in_ag, g.in_jump_set(t), "t={t}");
            assert!(!c.in_hg);
        }
        for n in 1..20u64 {
            let c = classify(&g, 1.0 / n as f64, d).unwrap();
            assert!(c.in_ag && c.in_dg);
        }
    }

    #[test]
    fn gtilde_hg_covers_unit_interval() {
        // H_gtilde = (0, 1]: every gap (1/(n+1), 1/n] including the jumps
        let g = gtilde();
        let d = dom(-1.0, 2.0);
        for t in [0.3, 0.5, 1.0 / 3.0, 0.26, 1.0, 0.9] {
            let c = classify(&g, t, d).unwrap();
            assert!(c.in_hg && c.in_ag, "t={t} should be in H and A");
        }
        for t in [-0.5, 0.0, 1.5, 2.0] {
            let c = classify(&g, t, d).unwrap();
            assert!(!c.in_hg, "t={t}");
        }
    }

    #[test]
    fn mutual_exclusion_on_fixtures() {
        let cases = [
            (paper_g(), dom(-1.0, 2.0)),
            (gtilde(), dom(-1.0, 2.0)),
            (g_a(), dom(-2.0, 3.0)),
            (identity(), dom(-1.0, 2.0)),
        ];
        for (g, d) in &cases {
            let mut k = 0;
            while k <= 600 {
                let t = d.a() + (d.b() - d.a()) * k as f64 / 600.0;
                let c = classify_unchecked(g, t, *d);
                let named = [c.in_cg, c.in_dg, c.in_ng_minus, c.in_ng_plus];
                assert!(
                    named.iter().filter(|&&x| x).count() <= 1,
                    "{} at {t}: {:?}",
                    g.name(),
                    named
                );
                assert!(!(c.in_d1 && c.in_td1));
                assert!(!(c.in_d2 && c.in_td2));
                assert!(!(c.in_d3 && c.in_td3));
                if c.in_hg {
                    assert!(c.in_ag, "{} at {t}: H_g ⊆ A_g", g.name());
                }
                if c.in_dg {
                    assert!(c.in_ag, "{} at {t}: D_g ⊆ A_g", g.name());
                }
                k += 1;
            }
            // jump points as well
            for n in 1..25u64 {
                let t = 1.0 / n as f64;
                if d.contains(t) {
                    let c = classify_unchecked(g, t, *d);
                    assert!(!(c.in_d1 && c.in_td1) && !(c.in_d2 && c.in_td2));
                }
            }
        }
    }

    #[test]
    fn star_of_cg_point_leaves_cg() {
        let cases = [(gtilde(), dom(-1.0, 2.0)), (g_a(), dom(-2.0, 3.0))];
        for (g, d) in &cases {
            let mut k = 1;
            while k < 400 {
                let t = d.a() + (d.b() - d.a()) * k as f64 / 400.0;
                let c = classify_unchecked(g, t, *d);
                if c.in_cg {
                    let cs = classify_unchecked(g, c.star, *d);
                    assert!(!cs.in_cg, "{} star({t})={} still in C_g", g.name(), c.star);
                    assert_eq!(c.component.unwrap().1.min(d.b()), c.star);
                }
                k += 1;
            }
        }
    }

    #[test]
    fn endpoint_one_sided_convention() {
        let g = paper_g();
        let c = classify(&g, 2.0, dom(-1.0, 2.0)).unwrap();
        assert!(!c.acc_dg_right && !c.acc_cg_right);
        let c = classify(&g, -1.0, dom(-1.0, 2.0)).unwrap();
        assert!(!c.acc_dg_left && !c.acc_cg_left);
        // at t = a the right side is still live, even at an accumulation point
        let d = Interval::new(0.0, 2.0).unwrap();
        let c = classify(&g, 0.0, d).unwrap();
        assert!(c.acc_dg_right && c.in_d3);
    }

    #[test]
    fn identity_is_everywhere_regular() {
        let g = identity();
        let d = dom(-1.0, 2.0);
        for t in [-1.0, -0.3, 0.0, 0.7, 2.0] {
            let c = classify(&g, t, d).unwrap();
            assert!(c.is_regular() && c.in_td3);
            assert!(!c.in_ag && !c.in_hg);
            assert_eq!(c.star, t);
            assert_eq!((c.level_inf, c.level_sup), (t, t));
        }
    }
}
