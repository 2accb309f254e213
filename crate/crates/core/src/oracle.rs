//! Quadrature cross-checks for the expanded closed forms.
//!
//! Every integrand here is built from [`ProductForm`] only; nothing in this
//! module touches the multi-index expansion, so an error in the expanded sums
//! cannot be reproduced by its oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{E, LN_2, PI};

use crate::analytic::ProductForm;
use crate::error::{Error, Result};
use crate::network::{ClusterTopology, LinkBudget, ModulationParams};
use crate::special::erfc;

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1] (QUADPACK qk15).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and truncation for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Integration truncation point; `None` picks the point where the
    /// integrand's tail bound drops below `abs_tol / 10`.
    pub upper_cutoff: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_subdivisions: 5000,
            upper_cutoff: None,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        let bad = |name, value| Error::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        };
        if !(self.abs_tol > 0.0) {
            return Err(bad("abs_tol", self.abs_tol));
        }
        if !(self.rel_tol > 0.0) {
            return Err(bad("rel_tol", self.rel_tol));
        }
        if self.max_subdivisions == 0 {
            return Err(bad("max_subdivisions", 0.0));
        }
        if let Some(c) = self.upper_cutoff {
            if !(c > 0.0 && c.is_finite()) {
                return Err(bad("upper_cutoff", c));
            }
        }
        Ok(())
    }

    fn cutoff(&self, tail_bound: impl Fn(f64) -> f64) -> f64 {
        self.upper_cutoff
            .unwrap_or_else(|| truncation_point(tail_bound, self.abs_tol / 10.0))
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    let mut abs_sum = kronrod.abs();
    let mut values = [(0.0, 0.0); 7];
    for (j, slot) in values.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        *slot = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in values.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Segment { a, b, value, error }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    integrate_with_breaks(f, &[a, b], abs_tol, rel_tol, max_subdivisions)
}

/// As [`integrate`] over `[points[0], points[last]]`, starting from one panel
/// per consecutive pair of `points` (ascending). Breakpoints at the scales
/// where the integrand varies keep narrow features from being stepped over.
pub fn integrate_with_breaks(
    f: impl Fn(f64) -> f64,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    if points.len() < 2 || points.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter {
            name: "points",
            value: points.len() as f64,
            reason: "need at least two strictly ascending breakpoints",
        });
    }
    let panels: Vec<Segment> = points
        .windows(2)
        .map(|w| kronrod15(&f, w[0], w[1]))
        .collect();
    let mut total: f64 = panels.iter().map(|s| s.value).sum();
    let mut total_err: f64 = panels.iter().map(|s| s.error).sum();
    let mut heap = BinaryHeap::from(panels);
    let mut subdivisions = 0;
    loop {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            // resum to shed the drift of incremental updates
            let value = heap.iter().map(|s| s.value).sum();
            return Ok(Integral {
                value,
                abs_error: total_err,
                subdivisions,
            });
        }
        if subdivisions >= max_subdivisions {
            return Err(Error::NonConvergence {
                subdivisions,
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
}

/// Smallest power-of-two bracket then bisection for `tail_bound(c) < target`.
fn truncation_point(tail_bound: impl Fn(f64) -> f64, target: f64) -> f64 {
    let mut hi = 1.0;
    while tail_bound(hi) >= target {
        hi *= 2.0;
        if hi > 1e300 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if tail_bound(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `P(γ_t > x) <= min_i L_i e^{-x/Γ^t_i}`, integrated from `c` to infinity.
fn survival_tail_mass(form: &ProductForm, c: f64) -> f64 {
    form.effective_gammas()
        .iter()
        .zip(form.cluster_sizes())
        .map(|(&g, &l)| f64::from(l) * g * (-c / g).exp())
        .fold(f64::INFINITY, f64::min)
}

/// `0`, the cutoff, and `scale * 4^k` for every scale, clipped to the range.
fn geometric_breaks(scales: &[f64], cutoff: f64) -> Vec<f64> {
    let mut points = vec![0.0, cutoff];
    for &s in scales {
        if !(s > 0.0 && s.is_finite()) {
            continue;
        }
        let mut p = s / 64.0;
        while p < cutoff {
            points.push(p);
            p *= 4.0;
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    points
}

/// Breakpoint scales in `u = sqrt(x)` for the SER-type integrands.
fn root_scales(form: &ProductForm, beta: f64) -> Vec<f64> {
    let mut scales: Vec<f64> = form.effective_gammas().iter().map(|g| g.sqrt()).collect();
    scales.push(beta.sqrt().recip());
    scales
}

/// Ergodic capacity as `(1/((N+1) ln 2)) ∫ (1 - F(x)) / (1 + x) dx`.
pub fn capacity_by_quadrature(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let form = ProductForm::new(topology, budget)?;
    let cutoff = spec.cutoff(|c| survival_tail_mass(&form, c));
    let mut scales = form.effective_gammas().to_vec();
    scales.push(1.0);
    let integral = integrate_with_breaks(
        |x| form.survival(x) / (1.0 + x),
        &geometric_breaks(&scales, cutoff),
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    )?;
    Ok(integral.value / (topology.hops() as f64 * LN_2))
}

/// SER as `α ∫ sqrt(β/(π x)) e^{-βx} F(x) dx`, integrated in `u = sqrt(x)`.
pub fn ser_by_quadrature(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    modulation: &ModulationParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let form = ProductForm::new(topology, budget)?;
    let beta = modulation.beta;
    // tail of the u-integrand: ∫_c^∞ 2 sqrt(β/π) e^{-β u^2} du = erfc(sqrt(β) c)
    let cutoff = spec.cutoff(|c| erfc(beta.sqrt() * c));
    let scale = 2.0 * (beta / PI).sqrt();
    let integral = integrate_with_breaks(
        |u| scale * (-beta * u * u).exp() * form.cdf(u * u),
        &geometric_breaks(&root_scales(&form, beta), cutoff),
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    )?;
    Ok(modulation.alpha * integral.value)
}

/// `E[C^2]` for the per-realisation rate `C = log2(1 + γ_t) / (N + 1)`,
/// integrated by parts as `∫ 2 ln(1 + x) / ((1 + x) c^2) (1 - F(x)) dx`.
pub fn capacity_second_moment_by_quadrature(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let form = ProductForm::new(topology, budget)?;
    let c = topology.hops() as f64 * LN_2;
    // ln(1 + x) / (1 + x) <= 1/e
    let cutoff = spec.cutoff(|t| 2.0 / (E * c * c) * survival_tail_mass(&form, t));
    let mut scales = form.effective_gammas().to_vec();
    scales.push(1.0);
    let integral = integrate_with_breaks(
        |x| 2.0 * x.ln_1p() / (1.0 + x) * form.survival(x),
        &geometric_breaks(&scales, cutoff),
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    )?;
    Ok(integral.value / (c * c))
}

/// `E[(α erfc(sqrt(β γ_t)))^2]`, integrated by parts in `u = sqrt(x)`:
/// `4 α^2 sqrt(β/π) ∫ erfc(sqrt(β) u) e^{-β u^2} F(u^2) du`.
pub fn ser_second_moment_by_quadrature(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    modulation: &ModulationParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let form = ProductForm::new(topology, budget)?;
    let beta = modulation.beta;
    let cutoff = spec.cutoff(|c| erfc(beta.sqrt() * c));
    let scale = 4.0 * (beta / PI).sqrt();
    let integral = integrate_with_breaks(
        |u| scale * erfc(beta.sqrt() * u) * (-beta * u * u).exp() * form.cdf(u * u),
        &geometric_breaks(&root_scales(&form, beta), cutoff),
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    )?;
    Ok(modulation.alpha * modulation.alpha * integral.value)
}

/// SNR-gain probability as `∫ (1 - F(μx)) e^{-x/Γ_d} / Γ_d dx`.
pub fn snr_gain_by_quadrature(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    mu: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "must be non-negative",
        });
    }
    let form = ProductForm::new(topology, budget)?;
    let gamma_d = budget.direct_avg_snr();
    // ∫_c^∞ S(μx) e^{-x/Γ_d} / Γ_d dx <= e^{-c/Γ_d} min(1, S-bound(μc))
    let cutoff = spec.cutoff(|c| {
        let s = form
            .effective_gammas()
            .iter()
            .zip(form.cluster_sizes())
            .map(|(&g, &l)| f64::from(l) * (-mu * c / g).exp())
            .fold(1.0, f64::min);
        (-c / gamma_d).exp() * s
    });
    let mut scales: Vec<f64> = form.effective_gammas().iter().map(|g| g / mu).collect();
    scales.push(gamma_d);
    let integral = integrate_with_breaks(
        |x| form.survival(mu * x) * (-x / gamma_d).exp() / gamma_d,
        &geometric_breaks(&scales, cutoff),
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    )?;
    Ok(integral.value)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn single_relay() -> (ClusterTopology, LinkBudget) {
        (
            ClusterTopology::new(vec![1]).unwrap(),
            LinkBudget::explicit(vec![10.0, 10.0], 1.0).unwrap(),
        )
    }

    #[test]
    fn integrates_smooth_functions() {
        let r = integrate(|x: f64| x.sin(), 0.0, PI, 1e-14, 1e-12, 100).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let r = integrate(|x: f64| (-x).exp(), 0.0, 50.0, 1e-15, 1e-12, 100).unwrap();
        assert!((r.value - (1.0 - (-50.0f64).exp())).abs() < 1e-13);
        // integrable endpoint singularity
        let r = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, 1e-9, 1e-9, 500).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(|x: f64| (1.0 / x).sin() / x, 1e-6, 1.0, 1e-15, 1e-15, 3);
        assert!(matches!(err, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn single_relay_oracles() {
        let (t, b) = single_relay();
        let spec = QuadratureSpec::default();
        let c = capacity_by_quadrature(&t, &b, &spec).unwrap();
        assert!((c - 1.077_223_415_758_444_8).abs() < 1e-9, "{c}");
        let s = ser_by_quadrature(&t, &b, &ModulationParams::bpsk(), &spec).unwrap();
        assert!((s - 0.043_564_535_412_361_563).abs() < 1e-11, "{s}");
        let o = snr_gain_by_quadrature(&t, &b, 1.0, &spec).unwrap();
        assert!((o - 1.0 / 1.2).abs() < 1e-11);
        assert!((snr_gain_by_quadrature(&t, &b, 0.0, &spec).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_survival_against_wide_direct_link() {
        // γ_t exponential with mean g much smaller than μ Γ_d: Ω = g / (g + μ Γ_d)
        let t = ClusterTopology::new(vec![1]).unwrap();
        let b = LinkBudget::explicit(vec![1.0, 7000.0], 7000.0).unwrap();
        let g = 7000.0 / 7001.0;
        let mu = 0.35;
        let o = snr_gain_by_quadrature(&t, &b, mu, &QuadratureSpec::default()).unwrap();
        let exact = g / (g + mu * 7000.0);
        assert!(((o - exact) / exact).abs() < 1e-10, "{o} vs {exact}");
    }

    #[test]
    fn breakpoints_partition_the_range() {
        let r = integrate_with_breaks(
            |x: f64| (-x).exp(),
            &[0.0, 0.5, 3.0, 50.0],
            1e-15,
            1e-13,
            100,
        )
        .unwrap();
        assert!((r.value - (1.0 - (-50f64).exp())).abs() < 1e-13);
        assert!(integrate_with_breaks(|x| x, &[0.0, 0.0, 1.0], 1e-9, 1e-9, 10).is_err());
        assert!(integrate_with_breaks(|x| x, &[1.0], 1e-9, 1e-9, 10).is_err());
        let p = geometric_breaks(&[1.0, f64::INFINITY], 10.0);
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 10.0);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_relay_second_moments() {
        // γ_t is exponential with mean 5; references from mpmath quad
        let (t, b) = single_relay();
        let spec = QuadratureSpec::default();
        let c2 = capacity_second_moment_by_quadrature(&t, &b, &spec).unwrap();
        assert!((c2 - 1.474_551_864_086_913_9).abs() < 1e-9, "{c2}");
        let s2 = ser_second_moment_by_quadrature(&t, &b, &ModulationParams::bpsk(), &spec).unwrap();
        assert!((s2 - 0.008_556_014_086_170_381).abs() < 1e-12, "{s2}");
        let c = capacity_by_quadrature(&t, &b, &spec).unwrap();
        assert!(c2 > c * c);
    }

    #[test]
    fn monotone_responses() {
        let (t, b) = single_relay();
        let spec = QuadratureSpec::default();
        let stronger = LinkBudget::explicit(vec![40.0, 40.0], 1.0).unwrap();
        assert!(
            capacity_by_quadrature(&t, &stronger, &spec).unwrap()
                > capacity_by_quadrature(&t, &b, &spec).unwrap()
        );
        let bpsk = ModulationParams::bpsk();
        let wide = ModulationParams::new("wide", 0.5, 2.0, true).unwrap();
        assert!(
            ser_by_quadrature(&t, &b, &wide, &spec).unwrap()
                < ser_by_quadrature(&t, &b, &bpsk, &spec).unwrap()
        );
        assert!(
            snr_gain_by_quadrature(&t, &b, 2.0, &spec).unwrap()
                < snr_gain_by_quadrature(&t, &b, 1.0, &spec).unwrap()
        );
    }

    #[test]
    fn degenerate_worst_channel_gives_alpha() {
        // F ≡ 1: α ∫ sqrt(β/(πx)) e^{-βx} dx = α
        let beta: f64 = 0.7;
        let scale = 2.0 * (beta / PI).sqrt();
        let r = integrate(
            |u| scale * (-beta * u * u).exp(),
            0.0,
            60.0,
            1e-15,
            1e-13,
            200,
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_integrand_starts_at_one() {
        let (t, b) = single_relay();
        let form = ProductForm::new(&t, &b).unwrap();
        assert_eq!(form.survival(0.0) / (1.0 + 0.0), 1.0);
    }

    #[test]
    fn cutoff_respects_tail_bound() {
        let t = ClusterTopology::new(vec![3, 2]).unwrap();
        let b = LinkBudget::explicit(vec![50.0, 20.0, 30.0], 1.0).unwrap();
        let form = ProductForm::new(&t, &b).unwrap();
        let c = truncation_point(|c| survival_tail_mass(&form, c), 1e-15);
        assert!(survival_tail_mass(&form, c) < 1e-15);
        assert!(survival_tail_mass(&form, 0.999 * c) >= 1e-15);
    }

    #[test]
    fn rejects_bad_spec() {
        let (t, b) = single_relay();
        let spec = QuadratureSpec {
            abs_tol: 0.0,
            ..QuadratureSpec::default()
        };
        assert!(capacity_by_quadrature(&t, &b, &spec).is_err());
    }
}
