//! Regenerates the fixture files under `fixtures/`.
//!
//! ```text
//! cargo run -p gbtopt --example write_fixtures -- fixtures
//! ```

use std::fs;
use std::path::PathBuf;

use gbtopt::synthetic::{random_ensemble, random_training_data, EnsembleSpec};
use gbtopt::{Tree, TreeEnsemble};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    fs::create_dir_all(&dir)?;

    let single = Tree::split(
        0,
        2.0,
        Tree::split(1, 3.0, Tree::leaf(1.2), Tree::leaf(2.7)),
        Tree::split(
            1,
            4.0,
            Tree::leaf(4.3),
            Tree::split(0, 4.0, Tree::leaf(3.1), Tree::leaf(5.6)),
        ),
    );
    let single = TreeEnsemble::new(2, vec![0.0; 2], vec![6.0; 2], vec![single])?;
    fs::write(dir.join("single_tree.json"), single.to_json_string())?;

    let s = Tree::split;
    let l = Tree::leaf;
    let left = s(
        0,
        3.0,
        s(1, 7.0, s(0, 1.0, l(1.0), l(2.0)), s(2, 5.0, l(0.5), l(1.5))),
        s(1, 7.0, l(-1.0), l(3.0)),
    );
    let right = s(
        2,
        2.0,
        s(1, 7.0, s(0, 4.0, l(0.25), l(2.5)), s(0, 6.0, l(-0.5), l(1.0))),
        s(0, 5.0, l(2.0), s(2, 8.0, l(-2.0), l(0.75))),
    );
    let pair = TreeEnsemble::new(3, vec![0.0; 3], vec![10.0; 3], vec![left, right])?;
    fs::write(dir.join("two_trees.json"), pair.to_json_string())?;

    let spec = EnsembleSpec {
        n: 2,
        trees: 5,
        depth: 3,
        pool: 4,
        seed: 2024,
        ..Default::default()
    };
    let five = random_ensemble(&spec);
    fs::write(dir.join("five_tree.json"), five.to_json_string())?;
    let mut csv = String::from("x0,x1\n");
    for row in random_training_data(2, 40, spec.lower, spec.upper, 7) {
        csv.push_str(&format!("{},{}\n", row[0], row[1]));
    }
    fs::write(dir.join("five_tree_train.csv"), csv)?;
    Ok(())
}
