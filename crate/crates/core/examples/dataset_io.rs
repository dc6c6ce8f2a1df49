//! Build a dataset in memory, write it as JSON lines and CSV, read it back
//! and split it.

use pldl::dataset::{split_dataset, DataItem, Dataset, SplitRatios};
use pldl::io::{load_dataset, to_csv, to_jsonl, write_atomic, DatasetFormat};
use pldl::labels::{LabelCounts, LabelSpace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let labels = LabelSpace::new(["neg", "neu", "pos"])?;
    let items = (0..12)
        .map(|i| {
            let counts = LabelCounts::new(vec![i % 3, 2, 5 - i % 3])?;
            Ok(DataItem::new(format!("doc{i}"), counts).with_features(vec![i as f64 / 12.0, 1.0]))
        })
        .collect::<pldl::Result<Vec<_>>>()?;
    let dataset = Dataset::new(labels, items)?;

    let dir = std::env::temp_dir().join("pldl-dataset-io");
    std::fs::create_dir_all(&dir)?;
    let jsonl = dir.join("docs.jsonl");
    let csv = dir.join("docs.csv");
    write_atomic(&jsonl, to_jsonl(&dataset, None)?.as_bytes())?;
    write_atomic(&csv, to_csv(&dataset)?.as_bytes())?;

    let back = load_dataset(&jsonl, DatasetFormat::from_path(&jsonl))?;
    assert_eq!(back.len(), dataset.len());
    let from_csv = load_dataset(&csv, DatasetFormat::Csv)?;
    assert_eq!(from_csv.label_totals(), dataset.label_totals());
    println!("{} items, label totals {:?}", back.len(), back.label_totals());
    println!("votes per item: {:?}", back.uniform_votes());

    let (train, dev, test) = split_dataset(&back, SplitRatios::default(), 7)?;
    println!("split sizes: {} / {} / {}", train.len(), dev.len(), test.len());
    println!("files under {}", dir.display());
    Ok(())
}
