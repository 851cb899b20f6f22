mod common;

use gbtopt::milp::{certificate_from_x, check_solution, milp_text, parse_solution_csv, solution_csv, MilpVarIndex};
use gbtopt::IndexedEnsemble;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certificates_satisfy_the_exported_model(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ens, pen) = small_instance(rng.random(), [0.0, 1.0, 1000.0][rng.random_range(0..3)]);
        let ix = IndexedEnsemble::new(&ens);
        let text = milp_text(&ix, &pen).unwrap();
        let model = parse_lp(&text).map_err(TestCaseError::fail)?;
        let index = MilpVarIndex::new(&ix);
        let bp = breakpoints(&ens);
        for _ in 0..10 {
            // breakpoints included: ties go right in both the tree and y
            let x: Vec<f64> = bp
                .iter()
                .map(|row| if rng.random::<bool>() { row[rng.random_range(0..row.len())] } else { rng.random_range(row[0]..=row[row.len() - 1]) })
                .collect();
            let cert = certificate_from_x(&ix, &x);
            let value = |name: &str| cert.values[index.column(name).unwrap()];
            let (viol, row) = model.max_violation(&value);
            prop_assert!(viol <= 1e-9, "row {} violated by {}", row, viol);
            let native = pen.eval(&x) + ens.evaluate(&x);
            let lp = model.objective.eval(&value);
            prop_assert!((lp - native).abs() <= 1e-9 * (1.0 + native.abs()), "{lp} vs {native}");
            let verdict = check_solution(&ix, &pen, &cert).unwrap();
            prop_assert!(verdict.is_feasible(), "{}", verdict);

            let back = parse_solution_csv(&ix, &solution_csv(&ix, &cert)).unwrap();
            prop_assert_eq!(back.values, cert.values);
        }
    }
}
