//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed. A criterion
//! listed in `DOCUMENTED_FAILURES` is reported as FAIL but does not fail the
//! process unless `ACCEPTANCE_STRICT=1` is set.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use engbench_core::backend::{ProblemId, Sense, SyntheticBackend};
use engbench_core::genmetrics::{
    cog, dpp_diversity, fog, iog, mmd2, rvc, ConstraintValues, DesignSet, OptimizationPath, DEFAULT_SIGMA, DPP_RIDGE,
};
use engbench_core::geometry::{extrude_to_mesh, has_diagonal_only_adjacency, is_watertight, read_stl, write_stl, TriangleMesh};
use engbench_core::grid::BinaryGrid;
use engbench_core::harness::{emit_reports, evaluate_run, run_matrix, AgentSpec, RunConfig};
use engbench_core::oracle::{run_hpc_oracle, run_oracle, OracleKind};
use engbench_core::prompt::{sample_instance, HpcPrompt, HpcPromptStyle, Style};
use engbench_core::rng::SplitMix64;
use engbench_core::scoring::{
    combined_overall, design_quality, effective_weights, hpc_score, rag_score, CompositeWeights, DesignScores,
    DqWeights, HpcRunRecord, HpcStep, HpcWeights, RagOutcome, RagParam, RagPrompt, ScoringWeights,
};
use engbench_core::trace::Tool;
use engbench_core::validate::FailureTag;

/// Published means carry two decimals.
const TABLE_TOL: f64 = 0.01;
/// Closed-form arithmetic checks.
const EXACT_TOL: f64 = 1e-12;
const MMD_SELF_MAX: f64 = 1e-12;
const DPP_IDENTICAL_MAX: f64 = 1e-4;
const CELLS_PER_STYLE: usize = 15;
const SEEDS: [u64; 3] = [1, 2, 3];
const SAMPLES: u32 = 5;

const AC1_LIMIT: Duration = Duration::from_secs(1);
const AC2_LIMIT: Duration = Duration::from_secs(5);
const AC6_LIMIT: Duration = Duration::from_secs(10);
const AC8_LIMIT: Duration = Duration::from_secs(60);

/// Criteria that cannot hold as written; see the README.
const DOCUMENTED_FAILURES: [&str; 1] = ["AC1"];

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, title: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { id, title, pass, detail }
}

fn cells() -> impl Iterator<Item = (u64, u32)> {
    SEEDS.into_iter().flat_map(|s| (0..SAMPLES).map(move |n| (s, n)))
}

struct TableRow {
    problem: String,
    style: String,
    model: String,
    subs: [f64; 6],
    tool_eff: f64,
    tc: f64,
    dq: f64,
    co: f64,
}

fn published_rows() -> Vec<TableRow> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/raw_scores.csv");
    let mut reader = csv::Reader::from_path(path).expect("fixture present");
    reader
        .records()
        .map(|rec| {
            let rec = rec.expect("fixture row");
            // A dash in the table (not reported) enters the sum as 0.
            let num = |i: usize| if rec[i].is_empty() { 0.0 } else { rec[i].parse::<f64>().expect("number") };
            TableRow {
                problem: rec[0].to_string(),
                style: rec[1].to_string(),
                model: rec[2].to_string(),
                subs: [num(3), num(4), num(5), num(6), num(7), num(8)],
                tool_eff: num(9),
                tc: num(10),
                dq: num(11),
                co: num(12),
            }
        })
        .collect()
}

fn scores(s: [f64; 6]) -> DesignScores {
    DesignScores {
        iou: s[0],
        pixel_accuracy: s[1],
        objective_score: s[2],
        constraint_score: s[3],
        connectivity: s[4],
        watertight: s[5],
    }
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let rows = published_rows();
    let (dqw, cw) = (DqWeights::default(), CompositeWeights::default());
    let mut dq_fail = Vec::new();
    let mut co_fail = Vec::new();
    for r in &rows {
        let dq = design_quality(&scores(r.subs), &dqw).unwrap();
        if (dq - r.dq).abs() > TABLE_TOL + EXACT_TOL {
            dq_fail.push(format!("{}/{}/{} DQ {dq:.4} vs {}", r.problem, r.style, r.model, r.dq));
        }
        let co = combined_overall(r.dq, r.tool_eff, r.tc, false, &cw);
        if (co - r.co).abs() > TABLE_TOL + EXACT_TOL {
            co_fail.push(format!("{}/{}/{} CO {co:.4} vs {}", r.problem, r.style, r.model, r.co));
        }
    }
    let elapsed = start.elapsed();
    let n = rows.len();
    let pass = n == 40 && dq_fail.is_empty() && co_fail.is_empty() && elapsed < AC1_LIMIT;
    let mut detail = format!(
        "DQ {}/{n}, CO {}/{n} within ±{TABLE_TOL}; {elapsed:.2?}",
        n - dq_fail.len(),
        n - co_fail.len()
    );
    for f in dq_fail.iter().chain(&co_fail) {
        detail.push_str(&format!("\n       off: {f}"));
    }
    verdict("AC1", "composite regression on the 40 published rows", pass, detail)
}

/// Whether some count of abstained runs k <= TC*n (n = 15) reproduces each
/// published row once abstained runs enter with a design term of 1.
fn ac1_abstention_check() -> Verdict {
    let cw = CompositeWeights::default();
    let n = CELLS_PER_STYLE as f64;
    let mut lines = Vec::new();
    let mut all = true;
    for r in published_rows() {
        let plain = combined_overall(r.dq, r.tool_eff, r.tc, false, &cw);
        if (plain - r.co).abs() <= TABLE_TOL {
            continue;
        }
        let max_k = (r.tc * n).round() as usize;
        let k = (0..=max_k).find(|&k| {
            let dq_eff = r.dq + k as f64 / n * (1.0 - r.dq);
            (cw.design * dq_eff + cw.tool * r.tool_eff + cw.completion * r.tc - r.co).abs() <= TABLE_TOL
        });
        all &= r.style == "Natural" && k.is_some();
        lines.push(format!("{}/{}: k = {}", r.style, r.model, k.map_or("none".into(), |k| format!("{k}/15"))));
    }
    verdict(
        "AC1*",
        "(diagnostic) off rows are Natural and fit an abstention mixture",
        all && !lines.is_empty(),
        lines.join("; "),
    )
}

fn ac2() -> Verdict {
    let start = Instant::now();
    let backend = SyntheticBackend;
    let w = ScoringWeights::default();
    let mut ok = 0;
    let mut worst = 0.0f64;
    for (seed, sample) in cells() {
        let inst = sample_instance(Style::WRand, ProblemId::Beams2d, seed, sample).unwrap();
        let p = evaluate_run(&inst, &run_oracle(OracleKind::Perfect, &inst, &backend).unwrap(), &backend, &w).unwrap();
        let o = evaluate_run(&inst, &run_oracle(OracleKind::OverCaller, &inst, &backend).unwrap(), &backend, &w).unwrap();
        let ratio = o.validation.matched_calls as f64 / o.validation.total_calls as f64;
        let expected_drop = 0.2 * (1.0 - ratio);
        let drop = p.score.combined_overall - o.score.combined_overall;
        worst = worst.max((drop - expected_drop).abs());
        let dq_same = p.score.design_quality.to_bits() == o.score.design_quality.to_bits();
        if dq_same && (drop - 0.04).abs() <= EXACT_TOL && (drop - expected_drop).abs() <= EXACT_TOL {
            ok += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "AC2",
        "extra tool call lowers CO by 0.2·(1 − matched/actual), DQ bit-identical",
        ok == CELLS_PER_STYLE && elapsed < AC2_LIMIT,
        format!("{ok}/{CELLS_PER_STYLE} cells, drop 0.04, max |Δ| {worst:.1e}; {elapsed:.2?}"),
    )
}

fn ac3() -> Verdict {
    let backend = SyntheticBackend;
    let mut ok = 0;
    let mut with_stl = 0;
    for (seed, sample) in cells() {
        let inst = sample_instance(Style::WCond, ProblemId::Beams2d, seed, sample).unwrap();
        let trace = run_oracle(OracleKind::BranchInverter, &inst, &backend).unwrap();
        let r = engbench_core::validate::validate(&inst, &trace, &backend).unwrap();
        let stl = trace.calls.iter().any(|c| c.tool == Tool::ConvertDesignToStl && c.ok);
        with_stl += usize::from(stl);
        let common = r.per_param["scale_xy"].pass && r.per_param["scale_z"].pass;
        let branch = !r.per_param["threshold"].pass && !r.per_param["mirror_y"].pass;
        if r.task_completion == 0 && stl && common && branch && r.branch_inverted {
            ok += 1;
        }
    }
    verdict(
        "AC3",
        "branch inverter: TC 0, STL called, common params pass, branch params fail",
        ok == CELLS_PER_STYLE,
        format!("{ok}/{CELLS_PER_STYLE} cells; convert_design_to_stl in {with_stl}/{CELLS_PER_STYLE} traces"),
    )
}

fn ac4() -> Verdict {
    let mut fails = Vec::new();
    for p in RagPrompt::ALL {
        let extracted = p.targets();
        let off = rag_score(&RagOutcome { prompt_id: p, extracted: extracted.clone(), rag_called: false }).unwrap();
        if off.score != 0.0 {
            fails.push(format!("{p} ungated {}", off.score));
        }
        let on = rag_score(&RagOutcome { prompt_id: p, extracted, rag_called: true }).unwrap();
        if (on.score - 1.0).abs() > EXACT_TOL {
            fails.push(format!("{p} perfect {}", on.score));
        }
    }
    let rmin = |v: f64| {
        let extracted = [(RagParam::Volfrac, 0.40), (RagParam::Rmin, v)].into_iter().collect();
        rag_score(&RagOutcome { prompt_id: RagPrompt::P2, extracted, rag_called: true }).unwrap().accuracy[&RagParam::Rmin]
    };
    let boundary = rmin(6.5) == 1.0 && rmin(5.5) == 1.0 && rmin(6.51) == 0.0 && rmin(5.49) == 0.0;
    if !boundary {
        fails.push("rmin boundary".into());
    }
    verdict(
        "AC4",
        "retrieval gate: 0 without search, 1 with perfect extraction, rmin ±0.5 boundary",
        fails.is_empty(),
        if fails.is_empty() { "P0–P3 gated to 0 and perfect at 1; |Δ|=0.5 passes, 0.51 fails".into() } else { fails.join(", ") },
    )
}

fn ac5() -> Verdict {
    let w = HpcWeights::default();
    let rec = |steps: &[HpcStep], metrics: u8, eval_called: bool| HpcRunRecord {
        steps_completed: steps.iter().copied().collect(),
        config_matches: true,
        metrics_extracted: metrics,
        config_step_called: true,
        eval_step_called: eval_called,
    };
    let examples = [
        (hpc_score(&rec(&HpcStep::ALL, 6, true), &w).unwrap(), 1.0),
        (hpc_score(&rec(&HpcStep::ALL, 3, true), &w).unwrap(), 0.925),
        (hpc_score(&rec(&HpcStep::ALL[..3], 0, false), &w).unwrap(), 0.7875),
    ];
    let examples_ok = examples.iter().all(|(got, want)| (got - want).abs() <= EXACT_TOL);
    let sums_ok = [(false, false), (false, true), (true, false), (true, true)].iter().all(|&(c, e)| {
        let r = HpcRunRecord { config_step_called: c, eval_step_called: e, ..rec(&[], 0, e) };
        (effective_weights(&r, &w).sum() - 1.0).abs() <= EXACT_TOL
    });
    let rate = |style| {
        (1..=10)
            .filter(|&seed| {
                run_hpc_oracle(OracleKind::HpcEvalDropper, &HpcPrompt::cgan(style, seed))
                    .unwrap()
                    .steps_completed
                    .contains(&HpcStep::Evaluate)
            })
            .count() as f64
            / 10.0
    };
    let (explicit, natural) = (rate(HpcPromptStyle::Explicit), rate(HpcPromptStyle::Natural));
    verdict(
        "AC5",
        "HPC score examples, weight closure, final-step completion rates",
        examples_ok && sums_ok && explicit == 0.70 && natural == 0.50,
        format!(
            "examples {:?}; weights close under 4 flag combos: {sums_ok}; evaluate rate explicit {explicit:.2}, natural {natural:.2}",
            examples.map(|(g, _)| g)
        ),
    )
}

fn random_set(rng: &mut SplitMix64, dim: usize) -> DesignSet {
    let n = 1 + (rng.next_u64() % 4) as usize;
    DesignSet::new((0..n).map(|_| (0..dim).map(|_| rng.uniform(-15.0, 15.0)).collect()).collect()).unwrap()
}

fn ac6() -> Verdict {
    let start = Instant::now();
    let mut rng = SplitMix64::new(6);
    let s = random_set(&mut rng, 5);
    let self_mmd = mmd2(&s, &s, DEFAULT_SIGMA).unwrap();
    let (mut sym, mut nonneg) = (0, 0);
    for _ in 0..100 {
        let dim = 1 + (rng.next_u64() % 4) as usize;
        let (a, b) = (random_set(&mut rng, dim), random_set(&mut rng, dim));
        let (ab, ba) = (mmd2(&a, &b, DEFAULT_SIGMA).unwrap(), mmd2(&b, &a, DEFAULT_SIGMA).unwrap());
        sym += usize::from((ab - ba).abs() <= EXACT_TOL);
        nonneg += usize::from(ab >= 0.0 && ba >= 0.0);
    }
    let one = dpp_diversity(&DesignSet::new(vec![vec![0.2, 0.8]]).unwrap(), DEFAULT_SIGMA).unwrap();
    let same = dpp_diversity(&DesignSet::new(vec![vec![0.5; 6]; 4]).unwrap(), DEFAULT_SIGMA).unwrap();
    let path = OptimizationPath { values: vec![5.0, 3.0, 2.0], f_star: 2.0, sense: Sense::Minimize };
    let gaps = (cog(&path).unwrap(), iog(&path).unwrap(), fog(&path).unwrap());
    let designs = DesignSet::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
    let two_of_four = |_: usize, d: &[f64]| Ok(ConstraintValues { inequality: vec![d[0] - 1.5], equality: vec![] });
    let none = |_: usize, _: &[f64]| Ok(ConstraintValues::default());
    let all = |_: usize, _: &[f64]| Ok(ConstraintValues { inequality: vec![], equality: vec![1.0] });
    let rvcs = (rvc(&designs, &none).unwrap(), rvc(&designs, &all).unwrap(), rvc(&designs, &two_of_four).unwrap());
    let elapsed = start.elapsed();
    let pass = self_mmd <= MMD_SELF_MAX
        && sym == 100
        && nonneg == 100
        && one == 1.0 + DPP_RIDGE
        && same < DPP_IDENTICAL_MAX
        && gaps == (4.0, 3.0, 0.0)
        && rvcs == (0.0, 1.0, 0.5)
        && elapsed < AC6_LIMIT;
    verdict(
        "AC6",
        "generative metrics: MMD identity/symmetry/sign, DPP limits, gaps, RVC",
        pass,
        format!(
            "mmd2(S,S) {self_mmd:.1e}; symmetric {sym}/100, non-negative {nonneg}/100; dpp 1×1 {one}, identical {same:.1e}; \
             cog/iog/fog {gaps:?}; rvc {rvcs:?}; {elapsed:.2?}"
        ),
    )
}

fn random_binary(rng: &mut SplitMix64, rows: usize, cols: usize, density: f64) -> BinaryGrid {
    BinaryGrid::new(rows, cols, (0..rows * cols).map(|_| rng.next_f64() < density).collect()).unwrap()
}

fn stl_ok(mesh: &TriangleMesh) -> bool {
    let bytes = write_stl(mesh).unwrap();
    if bytes.len() != 84 + 50 * mesh.triangles.len() {
        return false;
    }
    let facets = read_stl(&bytes).unwrap();
    facets.len() == mesh.triangles.len()
        && facets.iter().zip(&mesh.triangles).all(|(f, t)| {
            (0..3).all(|k| f.vertices[k] == mesh.vertices[t[k] as usize].map(|v| v as f32))
        })
}

fn ac7() -> Verdict {
    let single = extrude_to_mesh(&BinaryGrid::from_ascii("#").unwrap(), 1.0, 1.0).unwrap();
    let single_ok = is_watertight(&single).watertight && single.triangles.len() == 12;
    let mut rng = SplitMix64::new(7);
    let (mut diagonal, mut diagonal_ok, mut meshes, mut stl_pass) = (0, 0, 0, 0);
    for i in 0..300 {
        let g = random_binary(&mut rng, 2 + i % 6, 2 + i % 7, 0.45);
        if g.material_count() == 0 {
            continue;
        }
        let mesh = extrude_to_mesh(&g, rng.uniform(0.5, 4.0), rng.uniform(5.0, 25.0)).unwrap();
        meshes += 1;
        stl_pass += usize::from(stl_ok(&mesh));
        if has_diagonal_only_adjacency(&g) {
            diagonal += 1;
            diagonal_ok += usize::from(!is_watertight(&mesh).watertight);
        }
    }
    let pair = extrude_to_mesh(&BinaryGrid::from_ascii("#.\n.#").unwrap(), 1.0, 1.0).unwrap();
    let pair_ok = !is_watertight(&pair).watertight;
    verdict(
        "AC7",
        "geometry: unit cube watertight, diagonal-only adjacency never watertight, STL size and round-trip",
        single_ok && pair_ok && diagonal > 0 && diagonal_ok == diagonal && stl_pass == meshes,
        format!(
            "cube watertight {single_ok}; diagonal-only grids non-watertight {diagonal_ok}/{diagonal} (+ fixed pair {pair_ok}); \
             STL 84+50T and round-trip {stl_pass}/{meshes}"
        ),
    )
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn ac8() -> Verdict {
    let start = Instant::now();
    let agents = OracleKind::WORKFLOW.into_iter().map(AgentSpec::Oracle).collect();
    let config = RunConfig::new(ProblemId::Beams2d, Style::ALL.to_vec(), agents);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let first = run_matrix(&config, &SyntheticBackend).unwrap();
    emit_reports(&first, dirs[0].path()).unwrap();
    let second = run_matrix(&config, &SyntheticBackend).unwrap();
    emit_reports(&second, dirs[1].path()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| run_matrix(&config, &SyntheticBackend)).unwrap();
    emit_reports(&serial, dirs[2].path()).unwrap();
    let elapsed = start.elapsed();
    let (a, b, c) = (read_all(dirs[0].path()), read_all(dirs[1].path()), read_all(dirs[2].path()));
    let identical = a == b && a == c;
    let cells: BTreeSet<_> = first.runs.iter().map(|r| (r.style, r.agent.clone())).collect();
    verdict(
        "AC8",
        "full Beams2D matrix reruns byte-identical (also single-threaded)",
        identical && !a.is_empty() && elapsed < AC8_LIMIT,
        format!(
            "{} runs over {} applicable (style, oracle) pairs, {} files identical: {identical}; 3 runs in {elapsed:.2?}",
            first.runs.len(),
            cells.len(),
            a.len()
        ),
    )
}

fn ac9() -> Verdict {
    let backend = SyntheticBackend;
    let w = ScoringWeights::default();
    let (mut perfect_ok, mut blind_ok) = (0, 0);
    for (seed, sample) in cells() {
        let inst = sample_instance(Style::Natural, ProblemId::Beams2d, seed, sample).unwrap();
        let p = evaluate_run(&inst, &run_oracle(OracleKind::Perfect, &inst, &backend).unwrap(), &backend, &w).unwrap();
        if p.validation.task_completion == 1
            && p.validation.abstained
            && p.score.effective_design_quality == 1.0
            && (p.score.combined_overall - 1.0).abs() <= EXACT_TOL
        {
            perfect_ok += 1;
        }
        let trace = run_oracle(OracleKind::ClarificationBlind, &inst, &backend).unwrap();
        let b = evaluate_run(&inst, &trace, &backend, &w).unwrap();
        if b.validation.task_completion == 0 && b.validation.tags.contains(&FailureTag::ClarificationSkip) {
            blind_ok += 1;
        }
    }
    verdict(
        "AC9",
        "Natural abstention: perfect TC 1, DQ forced 1, CO 1; blind TC 0 with clarification_skip",
        perfect_ok == CELLS_PER_STYLE && blind_ok == CELLS_PER_STYLE,
        format!("perfect {perfect_ok}/{CELLS_PER_STYLE}, clarification_blind {blind_ok}/{CELLS_PER_STYLE}"),
    )
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let verdicts = [ac1(), ac1_abstention_check(), ac2(), ac3(), ac4(), ac5(), ac6(), ac7(), ac8(), ac9()];
    let mut fatal = Vec::new();
    println!();
    for v in &verdicts {
        let documented = DOCUMENTED_FAILURES.contains(&v.id);
        let status = match (v.pass, documented) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented)",
            (false, false) => "FAIL",
        };
        println!("{:<5} {status:<17} {} — {}", v.id, v.title, v.detail);
        if !v.pass && (!documented || strict) {
            fatal.push(v.id);
        }
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    println!("\nacceptance: {passed}/{} checks pass", verdicts.len());
    if !fatal.is_empty() {
        println!("failing: {}", fatal.join(", "));
        std::process::exit(1);
    }
}
