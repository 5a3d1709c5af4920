//! C interface to `stablematch`.
//!
//! Every function returns an [`SmStatus`]; outputs go through pointers.
//! On failure the message is kept per thread, see [`sm_last_error`].
//! Handles are owned by the caller and released with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stablematch::error::Error;
use stablematch::hierarchical::{exact_chain, stats};
use stablematch::instance::WeightedInstance;
use stablematch::matching::{stable_match_view, verify_stable, Matching};
use stablematch::models::{
    build_instance, ColorRule, MetricKind, ModelFamily, PointConfig, RuleKind,
};
use stablematch::odes::{
    closed_form_b_infinity, closed_form_x1_infinity, integrate_to_plateau, OdeSystem,
};
use stablematch::pwit::estimate_root_probabilities;
use stablematch::weight::Weight;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidWeight = 3,
    TiedWeights = 4,
    MalformedMatching = 5,
    CapExceeded = 6,
    Integration = 7,
    InsufficientHorizon = 8,
    SlackBudget = 9,
    Format = 10,
    Io = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmModel {
    OneType = 0,
    /// params: `eps`
    Asymmetric = 1,
    /// params: colour probabilities
    Symmetric = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmRule {
    OneType = 0,
    Asymmetric = 1,
    Symmetric = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmMetric {
    EuclideanTorus = 0,
    HierarchicalRho = 1,
    HierarchicalRhoTilde = 2,
}

/// Bounds for one level of the hierarchical recursion.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SmLevelStats {
    pub level: i32,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub mean_lo: f64,
}

/// Weighted instance (opaque).
pub struct SmInstance {
    inner: WeightedInstance,
}

/// Matching on an instance (opaque).
pub struct SmMatching {
    inner: Matching,
    stable: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SmStatus {
    match e {
        Error::InvalidWeight(_) => SmStatus::InvalidWeight,
        Error::TiedWeights { .. } => SmStatus::TiedWeights,
        Error::MalformedMatching(_) => SmStatus::MalformedMatching,
        Error::ClosureCapExceeded { .. } => SmStatus::CapExceeded,
        Error::InvalidParameter(_) => SmStatus::InvalidArgument,
        Error::Integration { .. } => SmStatus::Integration,
        Error::InsufficientHorizon { .. } => SmStatus::InsufficientHorizon,
        Error::SlackBudget { .. } => SmStatus::SlackBudget,
        Error::Format(_) => SmStatus::Format,
        Error::Io(_) => SmStatus::Io,
    }
}

struct Fail(SmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SmStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside stablematch".into());
            SmStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn family(model: SmModel, params: &[f64]) -> Result<ModelFamily, Fail> {
    let f = match model {
        SmModel::OneType => ModelFamily::OneType,
        SmModel::Asymmetric => match params {
            [eps] => ModelFamily::Asymmetric { eps: *eps },
            _ => {
                return Err(Fail(
                    SmStatus::InvalidArgument,
                    "asymmetric model takes one parameter".into(),
                ))
            }
        },
        SmModel::Symmetric => ModelFamily::Symmetric {
            probs: params.to_vec(),
        },
    };
    f.validate()?;
    Ok(f)
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Instance from a row-major `n x n` weight matrix. Only the upper
/// triangle is read; `INFINITY` marks an incompatible pair. `colors` may be
/// null.
///
/// # Safety
/// `weights` must point to `n * n` doubles, `colors` (if not null) to `n`
/// values, `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn sm_instance_from_matrix(
    n: usize,
    weights: *const f64,
    colors: *const u32,
    out_instance: *mut *mut SmInstance,
) -> SmStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        let w = slice(weights, n * n, "weights")?;
        let mut bad = None;
        let mut inst = WeightedInstance::from_fn(n, |i, j| {
            let v = w[i * n + j];
            if v == f64::INFINITY {
                Weight::INFINITE
            } else {
                Weight::new(v).unwrap_or_else(|_| {
                    bad.get_or_insert(v);
                    Weight::INFINITE
                })
            }
        });
        if let Some(v) = bad {
            return Err(Error::InvalidWeight(v).into());
        }
        if !colors.is_null() {
            inst = inst?.with_colors(slice(colors, n, "colors")?.to_vec());
        }
        *slot = Box::into_raw(Box::new(SmInstance { inner: inst? }));
        Ok(())
    })
}

/// Instance from `n` points in `[0, side)^dimension` with colours, under a
/// colour rule and metric. Hierarchical metrics need `dimension == 1`.
///
/// # Safety
/// `coords` must hold `n * dimension` doubles and `colors` `n` values.
#[no_mangle]
pub unsafe extern "C" fn sm_instance_from_points(
    dimension: usize,
    side: f64,
    n: usize,
    coords: *const f64,
    colors: *const u32,
    rule: SmRule,
    metric: SmMetric,
    out_instance: *mut *mut SmInstance,
) -> SmStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        let coords = slice(coords, n * dimension, "coords")?.to_vec();
        let colors = slice(colors, n, "colors")?.to_vec();
        let k = colors.iter().copied().max().map_or(1, |c| c as usize + 1);
        let rule = match rule {
            SmRule::OneType => ColorRule::from_kind(RuleKind::OneType, 1)?,
            SmRule::Asymmetric => ColorRule::from_kind(RuleKind::AsymmetricTwoType, 2)?,
            SmRule::Symmetric => ColorRule::from_kind(RuleKind::SymmetricKType, k.max(2))?,
        };
        let metric = match metric {
            SmMetric::EuclideanTorus => MetricKind::EuclideanTorus,
            SmMetric::HierarchicalRho => MetricKind::HierarchicalRho,
            SmMetric::HierarchicalRhoTilde => MetricKind::HierarchicalRhoTilde,
        };
        let config = PointConfig::new(dimension, side, coords, colors)?;
        let inner = build_instance(&config, &rule, metric)?;
        *slot = Box::into_raw(Box::new(SmInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from an `sm_instance_*` constructor (or be null).
#[no_mangle]
pub unsafe extern "C" fn sm_instance_free(instance: *mut SmInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_instance_len(
    instance: *const SmInstance,
    out_len: *mut usize,
) -> SmStatus {
    guard(|| {
        let inst = instance.as_ref().ok_or_else(|| null("instance"))?;
        *out(out_len, "out_len")? = inst.inner.len();
        Ok(())
    })
}

/// The unique stable matching of the instance.
///
/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_stable_match(
    instance: *const SmInstance,
    out_matching: *mut *mut SmMatching,
) -> SmStatus {
    guard(|| {
        let inst = instance.as_ref().ok_or_else(|| null("instance"))?;
        let slot = out(out_matching, "out_matching")?;
        let m = stable_match_view(&inst.inner)?;
        let stable = verify_stable(&inst.inner, &m)?.is_stable();
        *slot = Box::into_raw(Box::new(SmMatching { inner: m, stable }));
        Ok(())
    })
}

/// # Safety
/// `matching` must come from [`sm_stable_match`] (or be null).
#[no_mangle]
pub unsafe extern "C" fn sm_matching_free(matching: *mut SmMatching) {
    if !matching.is_null() {
        drop(Box::from_raw(matching));
    }
}

/// Partner of `vertex`, or -1 if unmatched.
///
/// # Safety
/// `matching` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_matching_partner(
    matching: *const SmMatching,
    vertex: usize,
    out_partner: *mut i64,
) -> SmStatus {
    guard(|| {
        let m = matching.as_ref().ok_or_else(|| null("matching"))?;
        let slot = out(out_partner, "out_partner")?;
        if vertex >= m.inner.len() {
            return Err(Fail(
                SmStatus::InvalidArgument,
                format!("vertex {vertex} out of range"),
            ));
        }
        *slot = m.inner.partner_of(vertex).map_or(-1, |p| p as i64);
        Ok(())
    })
}

/// Number of unmatched vertices and whether the matching passed the
/// stability check.
///
/// # Safety
/// `matching` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_matching_summary(
    matching: *const SmMatching,
    out_unmatched: *mut usize,
    out_stable: *mut bool,
) -> SmStatus {
    guard(|| {
        let m = matching.as_ref().ok_or_else(|| null("matching"))?;
        *out(out_unmatched, "out_unmatched")? = m.inner.unmatched().len();
        *out(out_stable, "out_stable")? = m.stable;
        Ok(())
    })
}

/// `eps * exp(1 - 1/eps)`, the limit of `b(t)` in the asymmetric model.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_asymmetric_limit(eps: f64, out_value: *mut f64) -> SmStatus {
    guard(|| {
        *out(out_value, "out_value")? = closed_form_b_infinity(eps)?;
        Ok(())
    })
}

/// Limit of `x_1(t)` in the symmetric model with `p = (p1, p2, ..., p2)`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_symmetric_limit(
    p1: f64,
    p2: f64,
    k: usize,
    out_value: *mut f64,
) -> SmStatus {
    guard(|| {
        *out(out_value, "out_value")? = closed_form_x1_infinity(p1, p2, k)?;
        Ok(())
    })
}

/// Integrates until the limit of `component` is known to `accuracy`;
/// writes the estimate, the certified bound and the horizon used.
///
/// # Safety
/// `params` must hold `n_params` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_ode_plateau(
    model: SmModel,
    params: *const f64,
    n_params: usize,
    component: usize,
    accuracy: f64,
    tolerance: f64,
    out_estimate: *mut f64,
    out_bound: *mut f64,
    out_t_max: *mut f64,
) -> SmStatus {
    guard(|| {
        let fam = family(model, slice(params, n_params, "params")?)?;
        let (_, p) =
            integrate_to_plateau(&OdeSystem::new(fam)?, component, accuracy, tolerance, 1e8)?;
        *out(out_estimate, "out_estimate")? = p.estimate;
        *out(out_bound, "out_bound")? = p.bound;
        *out(out_t_max, "out_t_max")? = p.t_max;
        Ok(())
    })
}

/// Monte Carlo estimate of `P(root has colour i, unmatched below t)` on the
/// PWIT, one entry per colour. `capacity` is the length of both output
/// arrays and must be at least the number of colours.
///
/// # Safety
/// `params` must hold `n_params` doubles; `out_estimates` and `out_se` must
/// hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn sm_pwit_estimate(
    model: SmModel,
    params: *const f64,
    n_params: usize,
    t: f64,
    replicates: usize,
    seed: u64,
    node_cap: usize,
    out_estimates: *mut f64,
    out_se: *mut f64,
    capacity: usize,
    out_censored: *mut usize,
) -> SmStatus {
    guard(|| {
        let fam = family(model, slice(params, n_params, "params")?)?;
        let k = fam.colors();
        if capacity < k {
            return Err(Fail(
                SmStatus::BufferTooSmall,
                format!("need {k} entries, got {capacity}"),
            ));
        }
        if out_estimates.is_null() || out_se.is_null() {
            return Err(null("output array"));
        }
        let est = estimate_root_probabilities(&fam, t, &[t], replicates, seed, node_cap)?;
        let e = std::slice::from_raw_parts_mut(out_estimates, k);
        let s = std::slice::from_raw_parts_mut(out_se, k);
        e.copy_from_slice(est.at_bound());
        s.copy_from_slice(est.se_at_bound());
        *out(out_censored, "out_censored")? = est.censored;
        Ok(())
    })
}

/// Certified bounds for levels `0..=top_level` of the hierarchical
/// recursion started at depth `base_depth` below unit length. Writes
/// `top_level + 1` rows.
///
/// # Safety
/// `out_levels` must hold `capacity` structs.
#[no_mangle]
pub unsafe extern "C" fn sm_hier_levels(
    lambda: f64,
    eps: f64,
    base_depth: u32,
    top_level: i32,
    n_max: usize,
    slack_budget: f64,
    out_levels: *mut SmLevelStats,
    capacity: usize,
    out_count: *mut usize,
) -> SmStatus {
    guard(|| {
        if top_level < 0 {
            return Err(Fail(
                SmStatus::InvalidArgument,
                "top_level must be >= 0".into(),
            ));
        }
        let need = top_level as usize + 1;
        if capacity < need {
            return Err(Fail(
                SmStatus::BufferTooSmall,
                format!("need {need} entries, got {capacity}"),
            ));
        }
        if out_levels.is_null() {
            return Err(null("out_levels"));
        }
        let chain = exact_chain(lambda, eps, base_depth, top_level, n_max, slack_budget)?;
        let rows = std::slice::from_raw_parts_mut(out_levels, need);
        for (row, s) in rows
            .iter_mut()
            .zip(chain.iter().map(stats).filter(|s| s.level >= 0))
        {
            *row = SmLevelStats {
                level: s.level,
                beta_lo: s.beta.lo,
                beta_hi: s.beta.hi,
                gamma_lo: s.gamma.lo,
                gamma_hi: s.gamma.hi,
                delta_lo: s.delta.lo,
                delta_hi: s.delta.hi,
                mean_lo: s.mean_lower,
            };
        }
        *out(out_count, "out_count")? = need;
        Ok(())
    })
}
