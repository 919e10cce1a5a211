//! Fixed numeric tolerances and limits.
//!
//! Every numeric verdict in the crate is taken against the constants below;
//! they are part of the contract, not runtime knobs. The CLI prints this
//! block at the top of every report so verdicts stay auditable.

/// A limit sequence is converged when the last `CONV_WINDOW` quotients agree.
pub const CONV_WINDOW: usize = 5;

/// Maximum samples taken along any one limit sequence.
pub const MAX_SAMPLES: usize = 48;

/// Relative agreement required inside the convergence window.
pub const CONV_REL: f64 = 1e-6;

/// Absolute agreement floor inside the convergence window.
pub const CONV_ABS: f64 = 1e-9;

/// Relative tolerance when reconciling limits from different sequences.
pub const CROSS_SEQ_REL: f64 = 1e-5;

/// Absolute tolerance when reconciling limits from different sequences.
pub const CROSS_SEQ_ABS: f64 = 1e-8;

/// A sequence diverges once its magnitude escapes past this monotonically.
pub const DIVERGE_MAG: f64 = 1e12;

/// Stabilization window tolerances for order >= 2 differencing. Inner
/// numeric derivatives carry their own stabilization error, so the outer
/// quotients cannot settle at order-1 precision.
pub const REC_CONV_REL: f64 = 1e-4;

/// Absolute companion to [`REC_CONV_REL`].
pub const REC_CONV_ABS: f64 = 1e-7;

/// Cross-sequence reconciliation tolerances for order >= 2.
pub const REC_CROSS_REL: f64 = 2e-4;

/// Absolute companion to [`REC_CROSS_REL`].
pub const REC_CROSS_ABS: f64 = 2e-6;

/// Generic samples for order >= 2 differencing keep a gap of at least
/// `REC_GAP_FLOOR * max(1, |t|)` from the target: below it the inner
/// derivative values quantize and the quotients stop carrying signal.
pub const REC_GAP_FLOOR: f64 = 2.384185791015625e-7; // 2^-22

/// Absolute error bound for power-law family tail evaluation.
pub const TAIL_BOUND: f64 = 1e-12;

/// A conditional limit counts as "vanishes" when |limit| is below this.
pub const ZERO_LIMIT_TOL: f64 = 1e-6;

/// Relative tolerance for symbolic-vs-oracle derivative agreement.
pub const ORACLE_AGREE_REL: f64 = 1e-4;

/// Absolute tolerance for symbolic-vs-oracle derivative agreement.
pub const ORACLE_AGREE_ABS: f64 = 1e-6;

/// Threshold for "exactly zero / exactly equal" pointwise checks.
pub const EXACT_EQ: f64 = 1e-12;

/// Numeric g-continuity: sup|f(s)-f(t)| below this counts as continuous.
pub const CONT_TOL: f64 = 1e-8;

/// Highest order the numeric derivative oracle evaluates.
pub const MAX_NUMERIC_ORDER: u32 = 3;

/// How many family jumps symbolic set enumerations keep per family.
pub const FAMILY_ENUM_CAP: usize = 40;

/// Scale factor applied to the first generic limit sample. Odd mantissa, so
/// geometric samples h0 * 2^-k never coincide with dyadic-rational jump
/// positions such as 1/2, 1/4, ...
pub const H0_DEALIAS: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Grid resolution used by sampled (non-symbolic) report sweeps.
pub const GRID_POINTS: usize = 512;

/// Render the configuration block shown at the top of CLI reports.
pub fn describe() -> String {
    format!(
        "config: conv_window={CONV_WINDOW} max_samples={MAX_SAMPLES} conv_rel={CONV_REL:.0e} \
         conv_abs={CONV_ABS:.0e} diverge_mag={DIVERGE_MAG:.0e} tail_bound={TAIL_BOUND:.0e}\n\
         config: zero_limit_tol={ZERO_LIMIT_TOL:.0e} oracle_agree_rel={ORACLE_AGREE_REL:.0e} \
         oracle_agree_abs={ORACLE_AGREE_ABS:.0e} exact_eq={EXACT_EQ:.0e} cont_tol={CONT_TOL:.0e}\n\
         config: max_numeric_order={MAX_NUMERIC_ORDER} family_enum_cap={FAMILY_ENUM_CAP} \
         h0=min(1,feature_dist)/4*{H0_DEALIAS:.6} refine_ratio=2"
    )
}
