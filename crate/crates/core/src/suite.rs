//! The standing experiment suite: a fixed roster of desk-scale instances
//! plus one check per acceptance criterion. The integration tests and the
//! CLI `suite` command both run these.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detect::{
    measure_support_marked, qpe_accept_probability, step_count, DetectionModel,
};
use crate::electric::{self, flow_energy, Flow};
use crate::error::Result;
use crate::families::{generate, FamilyConfig};
use crate::kdist::{
    build_kdist_graph, check_structure, kdist_flow, kdist_params, v0_prime_count, KDistInstance,
};
use crate::learning::{certify_detection, complexity, LearningGraph};
use crate::network::{ElectricNetwork, Instance, MarkedSet, Side, SourceDistribution};
use crate::spectral::OrthogonalEigen;
use crate::walk::{
    build_walk_operator, check_rw_lower_bound, diffusion_matrix, effective_gap_check,
    negative_witness, positive_witness, WalkOperator, WalkParams,
};

/// Constants used by the detection suite.
pub const SUITE_C1: f64 = 8.0;
pub const SUITE_C2: f64 = 4.0;
/// Constants used by the k-distinctness runs. At n <= 9 the start-level
/// overlap prefactor is far from its asymptotic value, so the default C1
/// does not clear the 2/3 bar; C1 = 32 restores a wide margin on every
/// buildable instance.
pub const KDIST_C1: f64 = 32.0;
pub const KDIST_C2: f64 = 4.0;

/// One roster entry: a walk-ready instance with its resistance bound.
#[derive(Debug, Clone)]
pub struct SuiteInstance {
    pub id: String,
    pub instance: Instance,
    pub r_param: f64,
    pub positive: bool,
}

/// A roster entry with its walk operator built.
pub struct Prepared {
    pub suite: SuiteInstance,
    pub params: WalkParams,
    pub op: WalkOperator,
}

/// Outcome of one acceptance check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, details: String) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            details,
        }
    }

    pub fn status_line(&self) -> String {
        format!(
            "{}: {} — {}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.details
        )
    }
}

/// The fixed instance roster: positive/negative twins over paths, cycles,
/// grids, stars, complete and random weighted graphs. Twins share the
/// positive variant's exact effective resistance as the known bound.
pub fn roster(seed: u64) -> Result<Vec<SuiteInstance>> {
    let mut configs: Vec<(FamilyConfig, FamilyConfig)> = Vec::new();
    let pair = |pos: FamilyConfig, neg: FamilyConfig| (pos, neg);
    for length in [1usize, 2, 4, 6, 8, 16] {
        configs.push(pair(
            FamilyConfig::Path { length, marked: true },
            FamilyConfig::Path { length, marked: false },
        ));
    }
    for length in [3usize, 5, 8] {
        configs.push(pair(
            FamilyConfig::Cycle { length, marked: true },
            FamilyConfig::Cycle { length, marked: false },
        ));
    }
    for leaves in [4usize, 8] {
        configs.push(pair(
            FamilyConfig::Star { leaves, marked: true },
            FamilyConfig::Star { leaves, marked: false },
        ));
    }
    for n in [4usize, 6] {
        configs.push(pair(
            FamilyConfig::Complete { n, marked: true },
            FamilyConfig::Complete { n, marked: false },
        ));
    }
    for (rows, cols) in [(2usize, 3usize), (3, 3)] {
        configs.push(pair(
            FamilyConfig::Grid { rows, cols, marked: true },
            FamilyConfig::Grid { rows, cols, marked: false },
        ));
    }
    for n in [6usize, 7, 8, 10, 12] {
        configs.push(pair(
            FamilyConfig::RandomWeighted { n, marked: true },
            FamilyConfig::RandomWeighted { n, marked: false },
        ));
    }

    let mut out = Vec::new();
    for (pos_cfg, neg_cfg) in configs {
        let instance_seed = seed.wrapping_add(out.len() as u64);
        let pos = generate(&pos_cfg, instance_seed)?;
        let r = electric::instance_resistance(&pos.instance)?;
        out.push(SuiteInstance {
            id: format!("{}-pos", pos.label),
            instance: pos.instance,
            r_param: r,
            positive: true,
        });
        let neg = generate(&neg_cfg, instance_seed)?;
        out.push(SuiteInstance {
            id: format!("{}-neg", neg.label),
            instance: neg.instance,
            r_param: r,
            positive: false,
        });
    }
    Ok(out)
}

/// Build walk operators for the whole roster, a few instances at a time.
pub fn prepare(roster: Vec<SuiteInstance>) -> Result<Vec<Prepared>> {
    let params: Vec<WalkParams> = roster
        .iter()
        .map(|s| WalkParams::with_constants(SUITE_C1, SUITE_C2, s.r_param))
        .collect::<Result<_>>()?;
    let mut ops: Vec<Option<WalkOperator>> = Vec::new();
    ops.resize_with(roster.len(), || None);

    let chunk = roster.len().div_ceil(4).max(1);
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (chunk_idx, slice) in ops.chunks_mut(chunk).enumerate() {
            let start = chunk_idx * chunk;
            let roster = &roster;
            let params = &params;
            handles.push(scope.spawn(move || -> Result<()> {
                for (i, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(build_walk_operator(
                        &roster[start + i].instance,
                        &params[start + i],
                    )?);
                }
                Ok(())
            }));
        }
        for h in handles {
            h.join().expect("suite worker panicked")?;
        }
        Ok(())
    })?;

    Ok(roster
        .into_iter()
        .zip(params)
        .zip(ops)
        .map(|((suite, params), op)| Prepared {
            suite,
            params,
            op: op.expect("operator built"),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Criterion checks
// ---------------------------------------------------------------------------

/// Commute-time and average-hitting-time identities on seeded random
/// connected weighted graphs.
pub fn criterion1_classical_identities(seed: u64) -> CheckResult {
    use rand::{Rng, SeedableRng};
    let started = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst_a = 0.0f64;
    let mut worst_b = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(5..=50);
        let mut pairs = std::collections::BTreeSet::new();
        for v in 1..n {
            let u = rng.gen_range(0..v);
            pairs.insert((u, v));
        }
        for _ in 0..n {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u != v {
                pairs.insert((u.min(v), u.max(v)));
            }
        }
        let edges = pairs
            .into_iter()
            .map(|(u, v)| crate::network::Edge::new(u, v, rng.gen_range(0.1..10.0)))
            .collect();
        let net = ElectricNetwork::new(n, edges).expect("random graph");
        let w = net.total_weight();

        let s = rng.gen_range(0..n);
        let mut t = rng.gen_range(0..n);
        while t == s {
            t = rng.gen_range(0..n);
        }
        let commute = electric::commute_time(&net, s, t).expect("commute");
        let r_st = electric::effective_resistance(
            &net,
            &SourceDistribution::point_mass(n, s).unwrap(),
            &MarkedSet::new([t], n).unwrap(),
        )
        .expect("resistance");
        worst_a = worst_a.max((commute - 2.0 * w * r_st).abs() / (2.0 * w * r_st));

        let m_size = rng.gen_range(1..=(n / 4).max(1));
        let mut marked = std::collections::BTreeSet::new();
        while marked.len() < m_size {
            marked.insert(rng.gen_range(0..n));
        }
        let marked = MarkedSet::new(marked, n).unwrap();
        let pi = net.stationary_distribution().unwrap();
        let h = electric::hitting_time(&net, &pi, &marked).expect("hitting");
        let r_pi = electric::effective_resistance(&net, &pi, &marked).expect("resistance");
        if r_pi > 1e-12 {
            worst_b = worst_b.max((h - 2.0 * w * r_pi).abs() / (2.0 * w * r_pi));
        }
    }
    let elapsed = started.elapsed();
    let passed = worst_a <= 1e-9 && worst_b <= 1e-9 && elapsed.as_secs_f64() < 30.0;
    CheckResult::new(
        "criterion 1 (classical identities)",
        passed,
        format!(
            "50 graphs, worst relative error: commute {worst_a:.2e}, average hitting {worst_b:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Operator soundness: unitarity, reflection squares, and commutation of
/// same-part local reflections.
pub fn criterion2_operator_soundness(prepared: &[Prepared]) -> CheckResult {
    let mut worst_unitary = 0.0f64;
    let mut worst_reflection = 0.0f64;
    let mut worst_commutator = 0.0f64;
    for p in prepared {
        let d = p.op.space.dim();
        let id = nalgebra::DMatrix::<f64>::identity(d, d);
        worst_unitary = worst_unitary.max((p.op.u.transpose() * &p.op.u - &id).norm());
        worst_reflection = worst_reflection.max((&p.op.r_a * &p.op.r_a - &id).norm());
        worst_reflection = worst_reflection.max((&p.op.r_b * &p.op.r_b - &id).norm());

        if d <= 60 {
            let partition = p.suite.instance.network.partition().expect("walk-ready");
            for side in [Side::A, Side::B] {
                let members: Vec<usize> = partition
                    .vertices_in(side)
                    .filter(|&u| !p.suite.instance.marked.contains(u))
                    .take(8)
                    .collect();
                for (i, &u) in members.iter().enumerate() {
                    for &v in &members[i + 1..] {
                        let du = diffusion_matrix(&p.op.space, &p.suite.instance, &p.params, u);
                        let dv = diffusion_matrix(&p.op.space, &p.suite.instance, &p.params, v);
                        worst_commutator = worst_commutator.max((&du * &dv - &dv * &du).norm());
                    }
                }
            }
        }
    }
    let passed = worst_unitary <= 1e-10 && worst_reflection <= 1e-10 && worst_commutator <= 1e-12;
    CheckResult::new(
        "criterion 2 (walk-operator soundness)",
        passed,
        format!(
            "{} operators: |U'U-I| <= {worst_unitary:.2e}, |R^2-I| <= {worst_reflection:.2e}, same-part commutators <= {worst_commutator:.2e}",
            prepared.len()
        ),
    )
}

/// Positive witness: fixed by U and overlapping the start state.
pub fn criterion3_positive_witness(prepared: &[Prepared]) -> CheckResult {
    let mut count = 0;
    let mut worst_residual = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for p in prepared.iter().filter(|p| p.suite.positive) {
        count += 1;
        let flow = electric::instance_flow(&p.suite.instance).expect("positive flow");
        let phi = positive_witness(&p.op.space, &p.suite.instance, &p.params, &flow)
            .expect("positive witness");
        let residual = ((&p.op.u * &phi) - &phi).norm() / phi.norm();
        worst_residual = worst_residual.max(residual);
        let start = p.op.space.start_state(&p.suite.instance);
        let overlap = phi.dot(&start) / phi.norm();
        let bound = (SUITE_C1 / (1.0 + SUITE_C1)).sqrt() - 1e-12;
        worst_margin = worst_margin.min(overlap - bound);
    }
    let passed = count >= 20 && worst_residual <= 1e-9 && worst_margin >= 0.0;
    CheckResult::new(
        "criterion 3 (positive witness)",
        passed,
        format!(
            "{count} positive instances: |U phi - phi|/|phi| <= {worst_residual:.2e}, overlap margin >= {worst_margin:.2e}"
        ),
    )
}

/// Negative witness: kernel of Pi_A, mapped to the start state by Pi_B,
/// with the closed-form norm.
pub fn criterion4_negative_witness(prepared: &[Prepared]) -> CheckResult {
    let mut count = 0;
    let mut worst_kernel = 0.0f64;
    let mut worst_start = 0.0f64;
    let mut worst_norm = 0.0f64;
    for p in prepared.iter().filter(|p| !p.suite.positive) {
        count += 1;
        let w = negative_witness(&p.op.space, &p.suite.instance, &p.params).expect("witness");
        let norm = w.norm();
        worst_kernel = worst_kernel.max((&p.op.pi_a * &w).norm() / norm);
        let start = p.op.space.start_state(&p.suite.instance);
        worst_start = worst_start.max(((&p.op.pi_b * &w) - start).norm() / norm);
        let closed = 1.0 + SUITE_C1 * p.suite.r_param * p.suite.instance.network.total_weight();
        worst_norm = worst_norm.max((w.norm_squared() - closed).abs() / closed);
    }
    let passed = count >= 20 && worst_kernel <= 1e-9 && worst_start <= 1e-9 && worst_norm <= 1e-9;
    CheckResult::new(
        "criterion 4 (negative witness)",
        passed,
        format!(
            "{count} negative instances: |Pi_A w| <= {worst_kernel:.2e}, |Pi_B w - start| <= {worst_start:.2e}, norm identity error <= {worst_norm:.2e}"
        ),
    )
}

/// Effective spectral gap bound over a 20-point theta sweep per negative
/// instance.
pub fn criterion5_gap_lemma(prepared: &[Prepared]) -> CheckResult {
    let mut checks = 0;
    let mut worst_slack = f64::INFINITY;
    for p in prepared.iter().filter(|p| !p.suite.positive) {
        let w = negative_witness(&p.op.space, &p.suite.instance, &p.params).expect("witness");
        for j in 1..=20 {
            let theta = std::f64::consts::PI * j as f64 / 20.0;
            let (lhs, bound) = effective_gap_check(&p.op, &w, theta).expect("gap check");
            worst_slack = worst_slack.min(bound + 1e-9 - lhs);
            checks += 1;
        }
    }
    let passed = checks > 0 && worst_slack >= 0.0;
    CheckResult::new(
        "criterion 5 (effective spectral gap)",
        passed,
        format!("{checks} (instance, theta) pairs, minimal slack {worst_slack:.2e}"),
    )
}

/// One detection outcome row of the sweep CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionRow {
    pub instance_id: String,
    pub n: usize,
    pub w: f64,
    pub r: f64,
    pub theta: f64,
    pub steps: u64,
    pub model: DetectionModel,
    pub accept_prob: f64,
    pub is_positive: bool,
}

pub fn csv_header() -> &'static str {
    "instance-id,n,W,R,theta,steps,model,accept-prob,is-positive"
}

impl DetectionRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.instance_id,
            self.n,
            self.w,
            self.r,
            self.theta,
            self.steps,
            self.model,
            self.accept_prob,
            self.is_positive
        )
    }
}

/// Detection rows for the whole roster, both models, reusing each
/// prepared operator.
pub fn detection_rows(prepared: &[Prepared]) -> Vec<DetectionRow> {
    let mut rows = Vec::new();
    for p in prepared {
        let (p_marked, _) = measure_support_marked(&p.suite.instance.sigma, &p.suite.instance.marked);
        debug_assert_eq!(p_marked, 0.0, "roster instances keep S and M disjoint");
        let w_total = p.suite.instance.network.total_weight();
        let theta = p.params.theta(w_total);
        let start = p.op.space.start_state(&p.suite.instance);
        for model in [DetectionModel::IdealThreshold, DetectionModel::QpeKernel] {
            let phase = qpe_accept_probability(&p.op.spectrum, &start, theta, model)
                .expect("normalized start state");
            rows.push(DetectionRow {
                instance_id: p.suite.id.clone(),
                n: p.suite.instance.network.vertex_count(),
                w: w_total,
                r: p.suite.r_param,
                theta,
                steps: step_count(theta, model),
                model,
                accept_prob: p_marked + (1.0 - p_marked) * phase,
                is_positive: p.suite.positive,
            });
        }
    }
    rows.sort_by(|a, b| (&a.instance_id, a.model as u8).cmp(&(&b.instance_id, b.model as u8)));
    rows
}

/// Detection separation: positives at least 2/3, negatives at most 1/3 in
/// both models, and the step bound `ceil(C sqrt(RW))`.
pub fn criterion6_detection_separation(prepared: &[Prepared]) -> CheckResult {
    let rows = detection_rows(prepared);
    let mut min_pos = f64::INFINITY;
    let mut max_neg: f64 = 0.0;
    let mut steps_ok = true;
    for p in prepared {
        let theta = p.params.theta(p.suite.instance.network.total_weight());
        let steps = step_count(theta, DetectionModel::IdealThreshold);
        let budget = (p.params.c_constant()
            * (p.suite.r_param * p.suite.instance.network.total_weight()).sqrt())
        .ceil() as u64;
        if steps > budget {
            steps_ok = false;
        }
    }
    for row in &rows {
        if row.is_positive {
            min_pos = min_pos.min(row.accept_prob);
        } else {
            max_neg = max_neg.max(row.accept_prob);
        }
    }
    let passed = rows.len() >= 60 && min_pos >= 2.0 / 3.0 && max_neg <= 1.0 / 3.0 && steps_ok;
    CheckResult::new(
        "criterion 6 (detection separation)",
        passed,
        format!(
            "{} rows: min positive accept {min_pos:.4}, max negative accept {max_neg:.4}, step bound {}",
            rows.len(),
            if steps_ok { "held" } else { "violated" }
        ),
    )
}

/// `R W >= 1` with equality on the single unit edge.
pub fn criterion7_rw_lower_bound(prepared: &[Prepared]) -> CheckResult {
    let mut worst = f64::INFINITY;
    let mut single_edge_gap = f64::INFINITY;
    let mut count = 0;
    for p in prepared.iter().filter(|p| p.suite.positive) {
        let flow = electric::instance_flow(&p.suite.instance).expect("flow");
        match check_rw_lower_bound(&p.suite.instance, &flow) {
            Ok(rw) => {
                count += 1;
                worst = worst.min(rw);
                if p.suite.id.starts_with("path1-") {
                    single_edge_gap = (rw - 1.0).abs();
                }
            }
            Err(e) => {
                return CheckResult::new(
                    "criterion 7 (RW lower bound)",
                    false,
                    format!("{}: {e}", p.suite.id),
                )
            }
        }
    }
    let passed = count > 0 && worst >= 1.0 - 1e-9 && single_edge_gap <= 1e-12;
    CheckResult::new(
        "criterion 7 (RW lower bound)",
        passed,
        format!("{count} positive instances: min RW = {worst:.6}, single-edge |RW-1| = {single_edge_gap:.2e}"),
    )
}

/// Precision scaling on unit paths: the coarsest precision that still
/// rejects scales like the inverse of sqrt(RW).
pub fn criterion8_precision_scaling() -> CheckResult {
    let started = Instant::now();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut detail = String::new();
    for length in [2usize, 4, 8, 16, 32] {
        let gen = generate(&FamilyConfig::Path { length, marked: false }, 0).expect("path");
        let r = length as f64;
        let params = WalkParams::with_constants(SUITE_C1, SUITE_C2, r).expect("params");
        let op = build_walk_operator(&gen.instance, &params).expect("operator");
        let start = op.space.start_state(&gen.instance);
        let overlaps = op.spectrum.overlaps(&start);
        let mut by_phase: Vec<(f64, f64)> = op
            .spectrum
            .phases
            .iter()
            .zip(&overlaps)
            .map(|(&p, &m)| (p.abs(), m))
            .collect();
        by_phase.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut cum = 0.0;
        let mut delta_max = std::f64::consts::PI;
        for (phase, mass) in by_phase {
            cum += mass;
            if cum > 1.0 / 3.0 {
                delta_max = phase;
                break;
            }
        }
        let sqrt_rw = (r * gen.instance.network.total_weight()).sqrt();
        xs.push(sqrt_rw.ln());
        ys.push((1.0 / delta_max).ln());
        detail.push_str(&format!("L={length}: 1/delta={:.2}; ", 1.0 / delta_max));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let slope: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mean_x).powi(2)).sum::<f64>();
    let elapsed = started.elapsed().as_secs_f64();
    let passed = (0.85..=1.15).contains(&slope) && elapsed < 120.0;
    CheckResult::new(
        "criterion 8 (precision scaling)",
        passed,
        format!("{detail}log-log slope {slope:.4}, {elapsed:.2}s"),
    )
}

/// Learning graphs: OR-star complexity and end-to-end certification.
pub fn criterion9_learning_graphs() -> CheckResult {
    let mut detail = String::new();
    let mut passed = true;
    for n in [2usize, 4, 9, 16] {
        let lg = LearningGraph::or_star(n).expect("or star");
        let positives: Vec<Vec<u8>> = (0..n)
            .map(|i| {
                let mut x = vec![0u8; n];
                x[i] = 1;
                x
            })
            .collect();
        let c = complexity(&lg, &positives).expect("complexity");
        let err = (c - (n as f64).sqrt()).abs();
        if err > 1e-12 {
            passed = false;
        }
        detail.push_str(&format!("n={n}: |complexity - sqrt(n)| = {err:.1e}; "));

        let report = certify_detection(&lg, &positives, &[vec![0u8; n]], SUITE_C1, SUITE_C2)
            .expect("certify");
        if !report.all_pass {
            passed = false;
            detail.push_str(&format!("n={n} certification failed; "));
        }
    }
    CheckResult::new("criterion 9 (learning graphs)", passed, detail)
}

/// The k-distinctness inputs exercised by the acceptance suite. At n = 5
/// the top type needs six elements (a triple, a pair and a singleton), so
/// no positive instance exists; n = 5 contributes the negative side only.
pub fn kdist_cases() -> (Vec<KDistInstance>, Vec<KDistInstance>) {
    let positive = [
        vec![1u32, 1, 1, 2, 2, 3],
        vec![1, 1, 1, 2, 2, 3, 3],
        vec![1, 1, 1, 2, 2, 3, 3, 4],
        vec![1, 1, 1, 2, 2, 3, 3, 4, 5],
    ];
    let negative = [
        vec![1u32, 1, 2, 2, 3],
        vec![1, 1, 2, 2, 3, 4],
        vec![1, 1, 2, 2, 3, 3, 4],
        vec![1, 1, 2, 2, 3, 3, 4, 5],
        vec![1, 1, 2, 2, 3, 3, 4, 5, 6],
    ];
    (
        positive
            .into_iter()
            .map(|x| KDistInstance::new(x, 3, vec![1, 1]).expect("valid instance"))
            .collect(),
        negative
            .into_iter()
            .map(|x| KDistInstance::new(x, 3, vec![1, 1]).expect("valid instance"))
            .collect(),
    )
}

/// Structure, flow, witness-norm, and detection checks for 3-distinctness.
pub fn criterion10_three_distinctness() -> CheckResult {
    let (positives, negatives) = kdist_cases();
    let mut detail = String::new();
    let mut passed = true;

    let mut run = |inst: &KDistInstance, positive: bool| {
        let graph = match build_kdist_graph(inst) {
            Ok(g) => g,
            Err(e) => {
                passed = false;
                detail.push_str(&format!("n={} build failed: {e}; ", inst.n()));
                return;
            }
        };
        let violations = check_structure(&graph, inst);
        if !violations.is_empty() {
            passed = false;
            detail.push_str(&format!("n={} structure: {}; ", inst.n(), violations.join(" | ")));
        }
        if positive {
            let flow = kdist_flow(&graph, inst).expect("canonical flow");
            let coll: u64 = inst
                .collision()
                .unwrap()
                .iter()
                .map(|&j| 1u64 << j)
                .sum();
            let v0p_ids: Vec<usize> = graph.levels[0]
                .iter()
                .filter(|&&m| m & coll == 0)
                .map(|&m| graph.vertex_of_subset(m).unwrap())
                .collect();
            let sigma_prime =
                SourceDistribution::uniform_on(graph.network.vertex_count(), &v0p_ids).unwrap();
            let (_, residual) =
                flow.conservation_residual(&graph.network, &sigma_prime, &graph.marked);
            if residual > 1e-12 {
                passed = false;
                detail.push_str(&format!("n={} flow residual {residual:.1e}; ", inst.n()));
            }

            let primed = Instance::new(
                graph.network.clone(),
                sigma_prime,
                graph.marked.clone(),
            )
            .unwrap();
            let v0p = v0_prime_count(&graph, inst).unwrap() as f64;
            let walk_inst = graph.walk_instance().expect("positive walk instance");
            let params = kdist_params(&graph, KDIST_C1, KDIST_C2).unwrap();
            let op = build_walk_operator(&walk_inst, &params).expect("walk operator");
            let params_prime =
                WalkParams::with_constants(KDIST_C1, KDIST_C2, 1.0 / v0p).unwrap();
            let phi = positive_witness(&op.space, &primed, &params_prime, &flow)
                .expect("kdist witness");
            let closed = (inst.k as f64 + KDIST_C1) / v0p;
            let norm_err = (phi.norm_squared() - closed).abs() / closed;
            if norm_err > 1e-12 {
                passed = false;
                detail.push_str(&format!("n={} witness norm error {norm_err:.1e}; ", inst.n()));
            }

            let theta = params.theta(walk_inst.network.total_weight());
            let start = op.space.start_state(&walk_inst);
            for model in [DetectionModel::IdealThreshold, DetectionModel::QpeKernel] {
                let accept = qpe_accept_probability(&op.spectrum, &start, theta, model)
                    .expect("acceptance");
                if accept < 2.0 / 3.0 {
                    passed = false;
                }
                detail.push_str(&format!("n={} pos {model} {accept:.4}; ", inst.n()));
            }
        } else if !graph.levels[0].is_empty() {
            let walk_inst = graph.walk_instance().expect("negative walk instance");
            let params = kdist_params(&graph, KDIST_C1, KDIST_C2).unwrap();
            let op = build_walk_operator(&walk_inst, &params).expect("walk operator");
            let theta = params.theta(walk_inst.network.total_weight());
            let start = op.space.start_state(&walk_inst);
            for model in [DetectionModel::IdealThreshold, DetectionModel::QpeKernel] {
                let accept = qpe_accept_probability(&op.spectrum, &start, theta, model)
                    .expect("acceptance");
                if accept > 1.0 / 3.0 {
                    passed = false;
                }
                detail.push_str(&format!("n={} neg {model} {accept:.4}; ", inst.n()));
            }
        }
    };

    for inst in &negatives {
        run(inst, false);
    }
    for inst in &positives {
        run(inst, true);
    }
    detail.push_str("n=5 has no positive instance (the top type needs 6 indices)");
    CheckResult::new("criterion 10 (3-distinctness)", passed, detail)
}

/// Collapse of the start distribution onto the unmarked part never raises
/// the resistance by more than 9x.
pub fn criterion11_collapse(seed: u64) -> CheckResult {
    use rand::{Rng, SeedableRng};
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut check = |instance: &Instance| match crate::detect::collapse_resistance_check(instance)
    {
        Ok(ratio) => {
            worst = worst.max(ratio);
            count += 1;
            true
        }
        Err(_) => false,
    };

    // Star with half the mass already on the marked leaf: ratio exactly 4.
    let star = ElectricNetwork::new(
        4,
        vec![
            crate::network::Edge::new(0, 1, 1.0),
            crate::network::Edge::new(0, 2, 1.0),
            crate::network::Edge::new(0, 3, 1.0),
        ],
    )
    .unwrap();
    let inst = Instance::new(
        star,
        SourceDistribution::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap(),
        MarkedSet::new([1], 4).unwrap(),
    )
    .unwrap();
    let mut ok = check(&inst);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1e);
    for _ in 0..12 {
        let n = rng.gen_range(4..10);
        let mut pairs = std::collections::BTreeSet::new();
        for v in 1..n {
            let u = rng.gen_range(0..v);
            pairs.insert((u, v));
        }
        let edges = pairs
            .into_iter()
            .map(|(u, v)| crate::network::Edge::new(u, v, rng.gen_range(0.5..2.0)))
            .collect();
        let net = ElectricNetwork::new(n, edges).unwrap();
        let mut probs = vec![0.0; n];
        probs[0] = 0.5;
        probs[n - 1] = 0.5;
        let inst = Instance::new(
            net,
            SourceDistribution::new(probs).unwrap(),
            MarkedSet::new([0], n).unwrap(),
        )
        .unwrap();
        ok &= check(&inst);
    }
    let passed = ok && count >= 13 && worst <= 9.0;
    CheckResult::new(
        "criterion 11 (collapse resistance)",
        passed,
        format!("{count} instances with 0 < p_marked < 2/3, worst ratio {worst:.4}"),
    )
}

/// Run every acceptance check in order.
pub fn run_all(seed: u64) -> Result<Vec<CheckResult>> {
    let prepared = prepare(roster(seed)?)?;
    Ok(vec![
        criterion1_classical_identities(seed),
        criterion2_operator_soundness(&prepared),
        criterion3_positive_witness(&prepared),
        criterion4_negative_witness(&prepared),
        criterion5_gap_lemma(&prepared),
        criterion6_detection_separation(&prepared),
        criterion7_rw_lower_bound(&prepared),
        criterion8_precision_scaling(),
        criterion9_learning_graphs(),
        criterion10_three_distinctness(),
        criterion11_collapse(seed),
    ])
}

/// Detection rows for the roster, for CSV emission.
pub fn suite_detection_rows(seed: u64) -> Result<Vec<DetectionRow>> {
    let prepared = prepare(roster(seed)?)?;
    Ok(detection_rows(&prepared))
}
