use copart_cli::{ConstraintEntry, ConstraintName, ImpurityName, OptionsEntry, ProblemFile, SolverName, SweepName};
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..4, 1usize..5).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-1e3..1e3f64, c), r))
}

fn problem_file() -> impl Strategy<Value = ProblemFile> {
    (
        matrix(),
        prop::option::of(matrix()),
        0usize..10,
        -10.0..10.0f64,
        prop_oneof![Just(ImpurityName::Entropy), Just(ImpurityName::Gini)],
        (
            prop_oneof![Just(ConstraintName::None), Just(ConstraintName::Entropy), Just(ConstraintName::Linear)],
            prop::option::of(prop::collection::vec(-5.0..5.0f64, 0..4)),
        ),
        prop::sample::select(SolverName::ALL.to_vec()),
        (any::<u64>(), 0usize..100, 0usize..1000, prop_oneof![Just(SweepName::Sequential), Just(SweepName::Batch)]),
    )
        .prop_map(|(joint_xy, channel, num_cells, beta, impurity, (name, weights), solver, (seed, restarts, max_iterations, sweep_mode))| {
            ProblemFile {
                format: 1,
                joint_xy,
                channel,
                num_cells,
                beta,
                impurity,
                constraint: ConstraintEntry { name, weights },
                solver,
                options: OptionsEntry { seed, restarts, max_iterations, sweep_mode },
            }
        })
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(file in problem_file()) {
        let text = file.to_json();
        let parsed = ProblemFile::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &file);
        prop_assert_eq!(ProblemFile::parse(&parsed.to_json()).unwrap(), parsed);
    }
}
