//! Detection of marked vertices with exact probability accounting.
//!
//! The procedure: check whether the initial distribution already sits on a
//! marked vertex and measure that bit; on "not marked" the state collapses
//! to the renormalized distribution off the marked set, and phase
//! estimation on the walk operator with precision theta accepts when the
//! measured eigenphase bucket is zero. Both branches are tracked with
//! exact weights rather than sampled.
//!
//! Two outcome models are available:
//!
//! * `IdealThreshold` accepts exactly the spectral mass within `theta`,
//!   using `ceil(1/theta)` controlled walk applications.
//! * `QpeKernel` weights each eigenphase by the probability that t-bit
//!   phase estimation returns the zero bucket, `F_t(theta) =
//!   |2^-t sum_m exp(i m theta)|^2` with `t = ceil(log2(1/delta))`,
//!   using `2^t` controlled applications.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ensure_walk_ready, Instance, MarkedSet, SourceDistribution};
use crate::spectral::OrthogonalEigen;
use crate::walk::{build_walk_operator, WalkParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionModel {
    IdealThreshold,
    QpeKernel,
}

impl std::fmt::Display for DetectionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DetectionModel::IdealThreshold => write!(f, "ideal"),
            DetectionModel::QpeKernel => write!(f, "kernel"),
        }
    }
}

/// Acceptance accounting for one detection run.
///
/// `total = early + (1 - early) * phase`; `steps` counts controlled walk
/// applications and is zero when the early measurement already fired.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionResult {
    pub early_accept_prob: f64,
    pub phase_accept_prob: f64,
    pub total_accept_prob: f64,
    pub steps: u64,
    pub theta_used: f64,
    pub model: DetectionModel,
}

/// Probability that the support measurement says "marked", and the
/// collapsed distribution on the complement (None when everything was
/// marked).
pub fn measure_support_marked(
    sigma: &SourceDistribution,
    marked: &MarkedSet,
) -> (f64, Option<SourceDistribution>) {
    let p_marked: f64 = sigma
        .support()
        .iter()
        .filter(|&&u| marked.contains(u))
        .map(|&u| sigma.prob(u))
        .sum();
    if p_marked >= 1.0 - 1e-15 {
        return (p_marked, None);
    }
    let rest: Vec<f64> = sigma
        .probabilities()
        .iter()
        .enumerate()
        .map(|(u, &p)| if marked.contains(u) { 0.0 } else { p / (1.0 - p_marked) })
        .collect();
    // Renormalize exactly; the division can leave a 1e-16 deficit.
    let sum: f64 = rest.iter().sum();
    let rest = rest.into_iter().map(|p| p / sum).collect();
    (
        p_marked,
        Some(SourceDistribution::new(rest).expect("renormalized distribution")),
    )
}

/// Probability that t-bit phase estimation on eigenphase `theta` outputs
/// the zero bucket.
pub fn kernel_bucket_zero(theta: f64, t: u32) -> f64 {
    let n = (1u64 << t) as f64;
    let half = 0.5 * theta;
    let denom = half.sin();
    if denom == 0.0 {
        return 1.0;
    }
    let ratio = (n * half).sin() / (n * denom);
    ratio * ratio
}

/// Acceptance probability of phase estimation with precision `delta` on
/// `state`, under the chosen outcome model.
pub fn qpe_accept_probability(
    spectrum: &OrthogonalEigen,
    state: &DVector<f64>,
    delta: f64,
    model: DetectionModel,
) -> Result<f64> {
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::UnnormalizedState(norm));
    }
    if !(delta > 0.0) || delta > std::f64::consts::PI {
        return Err(Error::InvalidPrecision(delta));
    }
    let overlaps = spectrum.overlaps(state);
    Ok(match model {
        DetectionModel::IdealThreshold => overlaps
            .iter()
            .zip(&spectrum.phases)
            .filter(|(_, &p)| p.abs() <= delta)
            .map(|(m, _)| m)
            .sum(),
        DetectionModel::QpeKernel => {
            let t = qpe_bits(delta);
            overlaps
                .iter()
                .zip(&spectrum.phases)
                .map(|(m, &p)| m * kernel_bucket_zero(p, t))
                .sum()
        }
    })
}

/// Ancilla count for the kernel model: `t = ceil(log2(1/delta))`.
pub fn qpe_bits(delta: f64) -> u32 {
    (1.0 / delta).log2().ceil().max(0.0) as u32
}

/// Controlled walk applications per model.
pub fn step_count(delta: f64, model: DetectionModel) -> u64 {
    match model {
        DetectionModel::IdealThreshold => (1.0 / delta).ceil() as u64,
        DetectionModel::QpeKernel => 1u64 << qpe_bits(delta),
    }
}

/// Run the detection procedure on an instance. The instance is made
/// walk-ready first (2-colored or doubled), so theta is computed with the
/// total weight of the graph the walk actually runs on. `params.r` must
/// upper-bound the effective resistance of any marked set that may occur.
pub fn detect(instance: &Instance, params: &WalkParams, model: DetectionModel) -> Result<DetectionResult> {
    let (ready, _doubled) = ensure_walk_ready(instance)?;
    let (early, collapsed) = measure_support_marked(&ready.sigma, &ready.marked);
    let Some(sigma_prime) = collapsed else {
        return Ok(DetectionResult {
            early_accept_prob: early,
            phase_accept_prob: 0.0,
            total_accept_prob: 1.0,
            steps: 0,
            theta_used: 0.0,
            model,
        });
    };
    let walk_instance = Instance::new(ready.network.clone(), sigma_prime, ready.marked.clone())?;
    let op = build_walk_operator(&walk_instance, params)?;
    let theta = params.theta(walk_instance.network.total_weight());
    let start = op.space.start_state(&walk_instance);
    let phase = qpe_accept_probability(&op.spectrum, &start, theta, model)?;
    let total = early + (1.0 - early) * phase;
    Ok(DetectionResult {
        early_accept_prob: early,
        phase_accept_prob: phase,
        total_accept_prob: total.clamp(0.0, 1.0),
        steps: step_count(theta, model),
        theta_used: theta,
        model,
    })
}

/// Draw a single accept/reject outcome from the exact probability.
pub fn sample_outcome<R: Rng>(result: &DetectionResult, rng: &mut R) -> bool {
    rng.gen_range(0.0..1.0) < result.total_accept_prob
}

/// Ratio `R_{sigma', M} / R_{sigma, M}` after collapsing away the marked
/// support mass. Whenever the marked probability is below 2/3 the ratio
/// stays below 9 (the collapsed flow `f / (1 - p)` has energy
/// `R / (1-p)^2`).
pub fn collapse_resistance_check(instance: &Instance) -> Result<f64> {
    if instance.marked.is_empty() {
        return Err(Error::NoMarkedVertices);
    }
    let (p_marked, collapsed) = measure_support_marked(&instance.sigma, &instance.marked);
    if p_marked >= 2.0 / 3.0 {
        return Err(Error::Precondition(format!(
            "marked support probability {p_marked} is not below 2/3"
        )));
    }
    let sigma_prime = collapsed.expect("p_marked < 2/3 leaves mass outside M");
    let r_before = crate::electric::effective_resistance(
        &instance.network,
        &instance.sigma,
        &instance.marked,
    )?;
    let r_after = crate::electric::effective_resistance(
        &instance.network,
        &sigma_prime,
        &instance.marked,
    )?;
    let ratio = r_after / r_before;
    if ratio > 9.0 + 1e-9 {
        return Err(Error::Precondition(format!(
            "collapse ratio {ratio} exceeded 9"
        )));
    }
    Ok(ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Edge, ElectricNetwork};
    use crate::spectral::Complex64;
    use nalgebra::DMatrix;

    fn single_edge(marked_t: bool) -> Instance {
        let net = ElectricNetwork::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let marked = if marked_t {
            MarkedSet::new([1], 2).unwrap()
        } else {
            MarkedSet::empty()
        };
        Instance::new(net, SourceDistribution::point_mass(2, 0).unwrap(), marked).unwrap()
    }

    #[test]
    fn support_measurement_examples() {
        let sigma = SourceDistribution::point_mass(3, 0).unwrap();
        let marked = MarkedSet::new([2], 3).unwrap();
        let (p, rest) = measure_support_marked(&sigma, &marked);
        assert_eq!(p, 0.0);
        assert_eq!(rest.unwrap(), sigma);

        let marked0 = MarkedSet::new([0], 3).unwrap();
        let (p, rest) = measure_support_marked(&sigma, &marked0);
        assert_eq!(p, 1.0);
        assert!(rest.is_none());

        let uniform = SourceDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        let (p, rest) = measure_support_marked(&uniform, &marked0);
        assert_eq!(p, 0.5);
        let rest = rest.unwrap();
        assert_eq!(rest.prob(1), 1.0);
    }

    /// Synthetic spectrum: identity eigenvectors with prescribed phases.
    fn synthetic(phases: Vec<f64>) -> OrthogonalEigen {
        let d = phases.len();
        OrthogonalEigen {
            phases,
            vectors: DMatrix::<Complex64>::identity(d, d),
        }
    }

    #[test]
    fn qpe_on_exact_eigenvectors() {
        let spec = synthetic(vec![0.0, 1.2]);
        let e0 = DVector::from_vec(vec![1.0, 0.0]);
        for model in [DetectionModel::IdealThreshold, DetectionModel::QpeKernel] {
            let p = qpe_accept_probability(&spec, &e0, 0.1, model).unwrap();
            assert!((p - 1.0).abs() < 1e-12, "{model}: {p}");
        }
        // An eigenphase exactly on a non-zero dyadic bucket scores zero in
        // the kernel model: theta = 2 pi m / 2^t has a vanishing sum.
        let delta = 0.1;
        let t = qpe_bits(delta);
        let theta = 2.0 * std::f64::consts::PI * 3.0 / (1u64 << t) as f64;
        let spec = synthetic(vec![theta, 0.0]);
        let e0 = DVector::from_vec(vec![1.0, 0.0]);
        let p = qpe_accept_probability(&spec, &e0, delta, DetectionModel::QpeKernel).unwrap();
        assert!(p < 1e-25, "kernel on dyadic phase: {p}");
        let ideal = qpe_accept_probability(&spec, &e0, delta, DetectionModel::IdealThreshold).unwrap();
        assert_eq!(ideal, 0.0);
    }

    #[test]
    fn qpe_rejects_bad_inputs() {
        let spec = synthetic(vec![0.0]);
        let long = DVector::from_vec(vec![2.0]);
        assert!(matches!(
            qpe_accept_probability(&spec, &long, 0.1, DetectionModel::IdealThreshold),
            Err(Error::UnnormalizedState(_))
        ));
        let unit = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            qpe_accept_probability(&spec, &unit, 0.0, DetectionModel::IdealThreshold),
            Err(Error::InvalidPrecision(_))
        ));
        assert!(matches!(
            qpe_accept_probability(&spec, &unit, 4.0, DetectionModel::IdealThreshold),
            Err(Error::InvalidPrecision(_))
        ));
    }

    #[test]
    fn detect_all_sources_marked_short_circuits() {
        let net = ElectricNetwork::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let inst = Instance::new(
            net,
            SourceDistribution::point_mass(2, 0).unwrap(),
            MarkedSet::new([0], 2).unwrap(),
        )
        .unwrap();
        let params = WalkParams::new(1.0).unwrap();
        let res = detect(&inst, &params, DetectionModel::IdealThreshold).unwrap();
        assert_eq!(res.total_accept_prob, 1.0);
        assert_eq!(res.steps, 0);
    }

    #[test]
    fn single_edge_detection_probabilities() {
        // Positive: the flow witness pins the +1 overlap at C1/(1+C1) = 8/9.
        let params = WalkParams::new(1.0).unwrap();
        let pos = detect(&single_edge(true), &params, DetectionModel::IdealThreshold).unwrap();
        assert!((pos.total_accept_prob - 8.0 / 9.0).abs() < 1e-10, "{}", pos.total_accept_prob);
        let pos_k = detect(&single_edge(true), &params, DetectionModel::QpeKernel).unwrap();
        assert!(pos_k.total_accept_prob >= 8.0 / 9.0 - 1e-10);

        // Negative: ideal mass below theta is zero; the kernel leaks a
        // small tail, frozen against an independent reference run.
        let neg = detect(&single_edge(false), &params, DetectionModel::IdealThreshold).unwrap();
        assert_eq!(neg.total_accept_prob, 0.0);
        assert!((neg.theta_used - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(neg.steps, 12);
        let neg_k = detect(&single_edge(false), &params, DetectionModel::QpeKernel).unwrap();
        assert!(neg_k.total_accept_prob <= 1.0 / 64.0 + 0.02);
        assert!((neg_k.total_accept_prob - 0.019696282918915).abs() < 1e-9);
        assert_eq!(neg_k.steps, 16);
    }

    #[test]
    fn ideal_acceptance_is_monotone_in_delta() {
        let params = WalkParams::new(2.0).unwrap();
        let inst = {
            let net = ElectricNetwork::new(
                3,
                vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)],
            )
            .unwrap();
            Instance::new(
                net,
                SourceDistribution::point_mass(3, 0).unwrap(),
                MarkedSet::empty(),
            )
            .unwrap()
        };
        let (ready, _) = ensure_walk_ready(&inst).unwrap();
        let op = build_walk_operator(&ready, &params).unwrap();
        let start = op.space.start_state(&ready);
        let mut last = 0.0;
        for k in 1..=40 {
            let delta = std::f64::consts::PI * k as f64 / 40.0;
            let p =
                qpe_accept_probability(&op.spectrum, &start, delta, DetectionModel::IdealThreshold)
                    .unwrap();
            assert!(p >= last - 1e-12);
            last = p;
        }
    }

    #[test]
    fn collapse_examples() {
        // Disjoint support: nothing collapses.
        let inst = single_edge(true);
        let ratio = collapse_resistance_check(&inst).unwrap();
        assert!((ratio - 1.0).abs() < 1e-12);

        // Star with sigma uniform on {center, leaf1}, M = {leaf1}:
        // p_marked = 1/2 and the ratio is exactly 1/(1-p)^2 = 4.
        let net = ElectricNetwork::new(
            4,
            vec![Edge::new(0, 1, 1.0), Edge::new(0, 2, 1.0), Edge::new(0, 3, 1.0)],
        )
        .unwrap();
        let sigma = SourceDistribution::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let inst = Instance::new(net, sigma, MarkedSet::new([1], 4).unwrap()).unwrap();
        let ratio = collapse_resistance_check(&inst).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);

        // p_marked above the threshold is rejected.
        let net = ElectricNetwork::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let sigma = SourceDistribution::new(vec![0.25, 0.75]).unwrap();
        let inst = Instance::new(net, sigma, MarkedSet::new([1], 2).unwrap()).unwrap();
        assert!(collapse_resistance_check(&inst).is_err());
    }

    #[test]
    fn collapse_ratio_bounded_on_random_overlaps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(4..9);
            let mut edges = Vec::new();
            for v in 1..n {
                let u = rng.gen_range(0..v);
                edges.push(Edge::new(u, v, rng.gen_range(0.5..2.0)));
            }
            let net = ElectricNetwork::new(n, edges).unwrap();
            // Half the mass on a marked vertex, half elsewhere.
            let mut probs = vec![0.0; n];
            probs[0] = 0.5;
            probs[n - 1] = 0.5;
            let inst = Instance::new(
                net,
                SourceDistribution::new(probs).unwrap(),
                MarkedSet::new([0], n).unwrap(),
            )
            .unwrap();
            let ratio = collapse_resistance_check(&inst).unwrap();
            assert!(ratio <= 9.0 + 1e-9, "ratio {ratio}");
        }
    }

    #[test]
    fn sampling_follows_exact_probability() {
        use rand::SeedableRng;
        let result = DetectionResult {
            early_accept_prob: 0.0,
            phase_accept_prob: 0.7,
            total_accept_prob: 0.7,
            steps: 10,
            theta_used: 0.1,
            model: DetectionModel::IdealThreshold,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let hits = (0..4000).filter(|_| sample_outcome(&result, &mut rng)).count();
        let freq = hits as f64 / 4000.0;
        assert!((freq - 0.7).abs() < 0.03, "{freq}");
    }
}
