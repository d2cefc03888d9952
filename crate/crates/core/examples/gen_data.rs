//! Regenerate the bundled synthetic corpus at data/synthetic_corpus.csv.
//!
//! Run from the repository root: `cargo run --example gen_data`

use racism_detect::corpus::write_dataset;
use racism_detect::synthetic::desk_corpus;

fn main() {
    let records = desk_corpus();
    let path = "data/synthetic_corpus.csv";
    write_dataset(&records, path).expect("write corpus");
    println!("wrote {} records to {path}", records.len());
}
