use std::collections::BTreeSet;

use engbench_core::backend::{ProblemId, SyntheticBackend};
use engbench_core::oracle::{run_oracle, OracleKind};
use engbench_core::prompt::{sample_instance, Style};
use engbench_core::trace::Tool;
use engbench_core::validate::{validate, Branch, FailureTag};

const SEEDS: [u64; 3] = [1, 2, 3];
const SAMPLES: u32 = 5;

fn cells() -> impl Iterator<Item = (ProblemId, u64, u32)> {
    [ProblemId::Beams2d, ProblemId::Photonics2d]
        .into_iter()
        .flat_map(|p| SEEDS.into_iter().flat_map(move |s| (0..SAMPLES).map(move |n| (p, s, n))))
}

fn tags(list: &[FailureTag]) -> BTreeSet<FailureTag> {
    list.iter().copied().collect()
}

#[test]
fn every_oracle_yields_its_signature() {
    let backend = SyntheticBackend;
    for (problem, seed, sample) in cells() {
        for style in Style::ALL {
            let inst = sample_instance(style, problem, seed, sample).unwrap();
            for kind in OracleKind::WORKFLOW.into_iter().filter(|k| k.applies_to(style)) {
                let trace = run_oracle(kind, &inst, &backend).unwrap();
                let r = validate(&inst, &trace, &backend).unwrap();
                let cell = format!("{kind} on {style} {problem} seed {seed} sample {sample}: {:?}", r.reasons);
                match kind {
                    OracleKind::Perfect => {
                        assert_eq!(r.task_completion, 1, "{cell}");
                        assert_eq!(r.tool_efficiency, 1.0, "{cell}");
                        assert!(r.tags.is_empty(), "{cell}");
                        assert_eq!(r.abstained, style == Style::Natural, "{cell}");
                    }
                    OracleKind::OverCaller => {
                        assert_eq!(r.task_completion, 1, "{cell}");
                        let plan = r.expected_calls as f64;
                        assert_eq!(r.tool_efficiency, plan / (plan + 1.0), "{cell}");
                        assert_eq!(r.tags, tags(&[FailureTag::OverCalling]), "{cell}");
                    }
                    OracleKind::BranchInverter => {
                        assert_eq!(r.task_completion, 0, "{cell}");
                        assert!(r.branch_inverted, "{cell}");
                        assert!(trace.calls.iter().any(|c| c.tool == Tool::ConvertDesignToStl && c.ok));
                        assert!(r.per_param["scale_xy"].pass && r.per_param["scale_z"].pass, "{cell}");
                        assert!(!r.per_param["threshold"].pass && !r.per_param["mirror_y"].pass, "{cell}");
                        assert_eq!(r.tags, tags(&[FailureTag::BranchInversion]), "{cell}");
                    }
                    OracleKind::RenderOmitter => {
                        assert_eq!(r.task_completion, 0, "{cell}");
                        assert_eq!(r.tool_efficiency, 0.75, "{cell}");
                        assert_eq!(r.tags, tags(&[FailureTag::RenderOmission]), "{cell}");
                    }
                    OracleKind::ClarificationBlind => {
                        assert_eq!(r.task_completion, 0, "{cell}");
                        assert!(!r.abstained);
                        assert_eq!(r.tags, tags(&[FailureTag::ClarificationSkip]), "{cell}");
                    }
                    OracleKind::DistractConfused => {
                        assert_eq!(r.task_completion, 0, "{cell}");
                        assert_eq!(r.tags, tags(&[FailureTag::DistractorSelected]), "{cell}");
                    }
                    _ => unreachable!(),
                }
            }
        }
    }
}

#[test]
fn conditional_cells_exercise_both_branches() {
    let backend = SyntheticBackend;
    for problem in [ProblemId::Beams2d, ProblemId::Photonics2d] {
        let mut seen = BTreeSet::new();
        for seed in SEEDS {
            for sample in 0..SAMPLES {
                let inst = sample_instance(Style::WCond, problem, seed, sample).unwrap();
                let trace = run_oracle(OracleKind::Perfect, &inst, &backend).unwrap();
                let r = validate(&inst, &trace, &backend).unwrap();
                seen.insert(format!("{:?}", r.branch_taken.unwrap()));
            }
        }
        let both: BTreeSet<String> = [Branch::High, Branch::Low].iter().map(|b| format!("{b:?}")).collect();
        assert_eq!(seen, both, "{problem}");
    }
}

#[test]
fn oracle_traces_are_deterministic_and_round_trip() {
    let backend = SyntheticBackend;
    let dir = tempfile::tempdir().unwrap();
    for style in Style::ALL {
        let inst = sample_instance(style, ProblemId::Beams2d, 2, 1).unwrap();
        let a = run_oracle(OracleKind::Perfect, &inst, &backend).unwrap();
        let b = run_oracle(OracleKind::Perfect, &inst, &backend).unwrap();
        assert_eq!(a.calls_jsonl().unwrap(), b.calls_jsonl().unwrap());
        assert_eq!(a.artifacts_json().unwrap(), b.artifacts_json().unwrap());
        let path = dir.path().join(format!("{style}.trace.jsonl"));
        a.write(&path).unwrap();
        let back = engbench_core::trace::Trace::read(&path).unwrap();
        assert_eq!(back, a);
        let r1 = validate(&inst, &a, &backend).unwrap();
        let r2 = validate(&inst, &back, &backend).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }
}
