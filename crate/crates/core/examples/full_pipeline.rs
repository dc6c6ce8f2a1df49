//! The command-line pipeline driven in-process: generate, ingest, select,
//! pool, sample, train, evaluate and report.

use std::path::Path;

fn pldl(dir: &Path, args: &[&str]) {
    let argv: Vec<String> = std::iter::once("pldl".to_string())
        .chain(args.iter().map(|a| a.replace("{}", &dir.display().to_string())))
        .collect();
    println!("$ {}", argv.join(" "));
    let code = pldl::cli::run(argv);
    assert_eq!(code, 0, "command failed");
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("pldl-pipeline");
    std::fs::create_dir_all(&dir)?;
    let annotators: Vec<String> = (0..10)
        .map(|a| format!(r#"{{"id": "a{a}", "reliability": {}}}"#, 0.7 + 0.03 * a as f64))
        .collect();
    let population = format!(
        r#"{{"labels": ["a", "b", "c", "d"], "n": 160, "votes": 8, "feature_noise": 0.1,
            "annotators": [{}],
            "population": {{"type": "mixture",
                           "components": [[0.7, 0.1, 0.1, 0.1], [0.1, 0.7, 0.1, 0.1], [0.1, 0.1, 0.1, 0.7]],
                           "weights": [0.3, 0.3, 0.4]}}}}"#,
        annotators.join(", ")
    );
    std::fs::write(dir.join("population.json"), population)?;

    pldl(
        &dir,
        &[
            "sample",
            "--generator",
            "population",
            "--population",
            "{}/population.json",
            "--seed",
            "4",
            "--out",
            "{}/raw.jsonl",
        ],
    );
    pldl(
        &dir,
        &[
            "ingest",
            "--data",
            "{}/raw.jsonl",
            "--out",
            "{}/data.jsonl",
            "--split-dir",
            "{}/split",
        ],
    );
    pldl(
        &dir,
        &[
            "select",
            "clusters",
            "--data",
            "{}/split/train.jsonl",
            "--p-max",
            "5",
            "--trials",
            "5",
            "--b",
            "100",
            "--out-dir",
            "{}/select",
        ],
    );
    pldl(
        &dir,
        &[
            "pool",
            "cluster",
            "--data",
            "{}/split/train.jsonl",
            "--p",
            "3",
            "--trials",
            "5",
            "--out",
            "{}/pooling.json",
        ],
    );
    pldl(
        &dir,
        &[
            "sample",
            "--generator",
            "cluster",
            "--pooling",
            "{}/pooling.json",
            "--seed",
            "1",
            "--out",
            "{}/synthetic.jsonl",
        ],
    );
    pldl(
        &dir,
        &[
            "train",
            "--data",
            "{}/split/train.jsonl",
            "--pooling",
            "{}/pooling.json",
            "--out",
            "{}/model.json",
        ],
    );
    pldl(
        &dir,
        &[
            "evaluate",
            "--data",
            "{}/split/test.jsonl",
            "--model",
            "{}/model.json",
            "--out",
            "{}/metrics.json",
        ],
    );
    pldl(
        &dir,
        &["report", "--pooling", "{}/pooling.json", "--out", "{}/histogram.csv"],
    );

    println!("\n{}", std::fs::read_to_string(dir.join("select/selection.csv"))?);
    println!("outputs in {}", dir.display());
    Ok(())
}
