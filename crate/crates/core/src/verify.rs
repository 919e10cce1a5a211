//! Randomized symbolic-vs-oracle verification campaign.
//!
//! Generates derivators within the representable class (a few segments,
//! atoms, and jump families), draws expressions from a fixed pool, and
//! compares symbolic g-derivatives against the numeric limit oracle at
//! points where the symbolic validity predicate holds. First-order
//! comparisons run at arbitrary sampled points; second-order comparisons
//! anchor at jump points and flat components, where the nested difference
//! quotients are structurally exact.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{eval_expr, g_derive_n, Expr};
use crate::config;
use crate::derivator::{
    Atom, Derivator, DomainMode, FamilySide, Interval, JumpFamily, MassRule, PositionRule,
    Segment,
};
use crate::oracle::{numeric_g_derivative, Verdict};
use crate::regularity::structural_sample_points;
use crate::Result;

/// One symbolic-vs-oracle disagreement.
#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub derivator: String,
    pub expr: String,
    pub t: f64,
    pub order: u32,
    pub symbolic: f64,
    pub oracle: f64,
}

/// Outcome of a campaign run.
#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub derivators: Vec<String>,
    pub comparisons: usize,
    pub mismatches: Vec<Mismatch>,
    /// validity undecided, point skipped
    pub skipped_unknown: usize,
    /// validity invalid at the point
    pub skipped_invalid: usize,
    /// the oracle did not converge at a validity-holding point
    pub oracle_unconverged: usize,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Run the campaign: `samples` comparisons per derivator over at least
/// five generated derivators, reproducible from the seed.
pub fn run_campaign(samples: usize, seed: u64) -> Result<CampaignReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CampaignReport {
        derivators: Vec::new(),
        comparisons: 0,
        mismatches: Vec::new(),
        skipped_unknown: 0,
        skipped_invalid: 0,
        oracle_unconverged: 0,
    };
    let pool = expression_pool();
    for idx in 0..5 {
        let (g, dom) = random_derivator(&mut rng, idx);
        report.derivators.push(describe(&g, dom));
        run_on_derivator(&g, dom, &pool, samples, &mut rng, &mut report)?;
    }
    Ok(report)
}

fn run_on_derivator(
    g: &Derivator,
    dom: Interval,
    pool: &[Expr],
    samples: usize,
    rng: &mut ChaCha8Rng,
    report: &mut CampaignReport,
) -> Result<()> {
    // order-1 points: structure plus uniform draws; order-2 points: jumps
    // and flat interiors only
    let mut order1_points: Vec<f64> = structural_sample_points(g, dom, 40)
        .into_iter()
        .filter(|t| dom.contains(*t))
        .collect();
    for _ in 0..32 {
        order1_points.push(rng.gen_range(dom.a()..dom.b()));
    }
    // second-order quotients divide inner derivative values by the jump at
    // t*, so anchors need jumps of honest size
    let mut order2_points: Vec<f64> = Vec::new();
    for (pos, mass) in g.jumps_in(dom.a(), dom.b(), 8)?.jumps {
        if mass >= 0.01 {
            order2_points.push(pos);
        }
    }
    for t in &order1_points {
        if g.component_of(*t).is_some() && g.jump_mass_at(g.star(*t, dom)?) >= 0.01 {
            order2_points.push(*t);
        }
    }
    if g.is_classical() {
        order2_points.extend(order1_points.iter().take(8));
    }

    for _ in 0..samples {
        let expr = &pool[rng.gen_range(0..pool.len())];
        let order: u32 = if !order2_points.is_empty() && rng.gen_bool(0.25) {
            2
        } else {
            1
        };
        let t = if order == 2 {
            order2_points[rng.gen_range(0..order2_points.len())]
        } else {
            order1_points[rng.gen_range(0..order1_points.len())]
        };
        compare_at(g, dom, expr, t, order, report)?;
    }
    Ok(())
}

/// Compare the symbolic derivative of `expr` with the numeric oracle at
/// one point, honoring the validity verdict.
pub fn compare_at(
    g: &Derivator,
    dom: Interval,
    expr: &Expr,
    t: f64,
    order: u32,
    report: &mut CampaignReport,
) -> Result<()> {
    use crate::calculus::Decision;
    let chain = g_derive_n(expr, order);
    let result = &chain[order as usize - 1];
    match result.decide(g, t, dom)? {
        Decision::Valid => {}
        Decision::Invalid(_) => {
            report.skipped_invalid += 1;
            return Ok(());
        }
        Decision::Unknown(_) => {
            report.skipped_unknown += 1;
            return Ok(());
        }
    }
    let Ok(symbolic) = eval_expr(&result.derivative, g, t, dom) else {
        report.skipped_invalid += 1;
        return Ok(());
    };
    let f = expr.as_fn(g, dom);
    let oracle = numeric_g_derivative(&f, g, t, dom, order)?;
    report.comparisons += 1;
    match oracle.verdict {
        Verdict::Converged(v) => {
            let tol = (config::ORACLE_AGREE_REL * symbolic.abs()).max(config::ORACLE_AGREE_ABS);
            if (v - symbolic).abs() > tol {
                report.mismatches.push(Mismatch {
                    derivator: g.name().to_string(),
                    expr: expr.to_string(),
                    t,
                    order,
                    symbolic,
                    oracle: v,
                });
            }
        }
        _ => report.oracle_unconverged += 1,
    }
    Ok(())
}

/// The fixed expression pool (20+ expressions over every variant).
pub fn expression_pool() -> Vec<Expr> {
    use Expr::*;
    let g2 = Expr::product(GVal, GVal);
    vec![
        GVal,
        DeltaG,
        IndicatorDg,
        QVal,
        Const(3.5),
        Expr::star(DeltaG),
        Expr::star(IndicatorDg),
        Expr::star(QVal),
        g2.clone(),
        Expr::sum(Expr::scale(2.0, GVal), Const(3.0)),
        Expr::sum(g2.clone(), Expr::scale(-1.0, GVal)),
        Expr::product(GVal, DeltaG),
        Expr::product(GVal, IndicatorDg),
        Expr::product(Expr::sum(GVal, Const(1.0)), GVal),
        Expr::NProduct(vec![GVal, GVal, GVal]),
        Expr::NProduct(vec![GVal, GVal, GVal, GVal]),
        Expr::product(g2.clone(), Expr::star(DeltaG)),
        Expr::scale(-2.0, g2.clone()),
        Expr::product(Expr::sum(GVal, Const(-0.5)), Expr::sum(GVal, Const(2.0))),
        Expr::quotient(g2.clone(), Expr::sum(Expr::product(GVal, GVal), Const(10.0))),
        Expr::quotient(GVal, Expr::sum(g2, Const(5.0))),
        Expr::sum(Expr::product(GVal, DeltaG), Expr::scale(0.5, GVal)),
        Expr::product(DeltaG, DeltaG),
        Expr::sum(Expr::star(DeltaG), Expr::scale(3.0, IndicatorDg)),
    ]
}

/// Generate a valid derivator (at most 4 segments, 3 atoms, 2 families)
/// together with a domain passing the derivative-mode endpoint conditions.
pub fn random_derivator(rng: &mut ChaCha8Rng, index: usize) -> (Derivator, Interval) {
    loop {
        let n_seg = rng.gen_range(1..=4usize);
        let mut froms: Vec<f64> = (0..n_seg)
            .map(|_| (rng.gen_range(-24..=24i64) as f64) / 8.0)
            .collect();
        froms.sort_by(f64::total_cmp);
        froms.dedup();
        let slopes: Vec<f64> = (0..froms.len())
            .map(|i| {
                if i == 0 || i + 1 == froms.len() {
                    *[0.5, 1.0, 2.0].choose(rng).expect("nonempty")
                } else {
                    *[0.0, 0.0, 0.5, 1.0, 2.0].choose(rng).expect("nonempty")
                }
            })
            .collect();
        let segments: Vec<Segment> = froms
            .iter()
            .zip(&slopes)
            .map(|(&from, &slope)| Segment { from, slope })
            .collect();

        let n_atoms = rng.gen_range(0..=3usize);
        let mut atoms = Vec::new();
        for _ in 0..n_atoms {
            atoms.push(Atom {
                at: (rng.gen_range(-20..=20i64) as f64) / 8.0 + 1.0 / 64.0,
                mass: *[0.25, 0.5, 1.0].choose(rng).expect("nonempty"),
            });
        }

        let n_fams = rng.gen_range(0..=2usize);
        let mut families = Vec::new();
        for k in 0..n_fams {
            let side = if rng.gen_bool(0.5) {
                FamilySide::RightOf
            } else {
                FamilySide::LeftOf
            };
            let mass = if rng.gen_bool(0.7) {
                MassRule::Geometric {
                    scale: *[0.5, 1.0].choose(rng).expect("nonempty"),
                    ratio: *[0.3, 0.5].choose(rng).expect("nonempty"),
                }
            } else {
                MassRule::Power {
                    scale: *[0.5, 1.0].choose(rng).expect("nonempty"),
                    exponent: *[2.0, 3.0].choose(rng).expect("nonempty"),
                }
            };
            families.push(JumpFamily {
                accumulation: (rng.gen_range(-12..=12i64) as f64) / 8.0
                    + (k as f64 + 1.0) / 128.0,
                side,
                position: PositionRule {
                    c: *[0.5, 1.0].choose(rng).expect("nonempty"),
                    p: *[1.0, 2.0].choose(rng).expect("nonempty"),
                },
                mass,
                n_start: rng.gen_range(1..=2u64),
            });
        }

        let name = format!("generated_{index}");
        let Ok(g) = Derivator::new(name, segments, atoms, families) else {
            continue;
        };
        // a domain stretching past every feature is regular at both ends
        let lo = froms[0]
            .min(
                g.atoms()
                    .iter()
                    .map(|a| a.at)
                    .fold(f64::INFINITY, f64::min),
            )
            .min(
                g.families()
                    .iter()
                    .map(|f| f.accumulation - 2.0)
                    .fold(f64::INFINITY, f64::min),
            );
        let hi = froms[froms.len() - 1]
            .max(
                g.atoms()
                    .iter()
                    .map(|a| a.at)
                    .fold(f64::NEG_INFINITY, f64::max),
            )
            .max(
                g.families()
                    .iter()
                    .map(|f| f.accumulation + 2.0)
                    .fold(f64::NEG_INFINITY, f64::max),
            );
        let dom = match Interval::new(lo - 0.8 - 1.0 / 512.0, hi + 0.9 + 1.0 / 512.0) {
            Ok(d) => d,
            Err(_) => continue,
        };
        if !g.validate_domain(dom, DomainMode::Derivative).is_empty() {
            continue;
        }
        return (g, dom);
    }
}

fn describe(g: &Derivator, dom: Interval) -> String {
    format!(
        "{}: {} segments, {} atoms, {} families on {}",
        g.name(),
        g.segments().len(),
        g.atoms().len(),
        g.families().len(),
        dom
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn campaign_is_reproducible() {
        let a = run_campaign(20, 42).unwrap();
        let b = run_campaign(20, 42).unwrap();
        assert_eq!(a.comparisons, b.comparisons);
        assert_eq!(a.derivators, b.derivators);
        assert_eq!(a.mismatches.len(), b.mismatches.len());
    }

    #[test]
    fn small_campaign_has_no_mismatches() {
        let r = run_campaign(40, 7).unwrap();
        assert!(
            r.mismatches.is_empty(),
            "mismatches: {:?}",
            r.mismatches
        );
        assert!(r.comparisons > 50, "coverage too thin: {}", r.comparisons);
    }

    #[test]
    fn generated_derivators_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..20 {
            let (g, dom) = random_derivator(&mut rng, i);
            assert!(g.segments().len() <= 4);
            assert!(g.atoms().len() <= 3);
            assert!(g.families().len() <= 2);
            assert!(g.validate_domain(dom, DomainMode::Derivative).is_empty());
        }
    }

    #[test]
    fn pool_covers_every_variant() {
        let pool = expression_pool();
        assert!(pool.len() >= 20);
        let all = pool
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        for needle in ["g", "dg", "chi", "q", "star", "/", "+", "scale"] {
            assert!(all.contains(needle), "pool misses {needle}");
        }
    }
}
