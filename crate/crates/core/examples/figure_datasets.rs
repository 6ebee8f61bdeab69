//! Writes every figure dataset as CSV into a directory (default `figures/`).

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use effrate::figures::{describe, figure, FigureBase, FIGURE_IDS};
use effrate::output::Format;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    std::fs::create_dir_all(&dir)?;
    let base = FigureBase::default();
    for id in FIGURE_IDS {
        let table = figure(id, &base)?;
        let path = dir.join(format!("figure_{id:02}.csv"));
        table.write(Format::Csv, BufWriter::new(File::create(&path)?))?;
        println!(
            "{} ({} rows): {}",
            path.display(),
            table.rows.len(),
            describe(id).unwrap_or("")
        );
    }
    Ok(())
}
