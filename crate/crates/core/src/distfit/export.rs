//! Plot-data and CSV exports of CCDF points.
//!
//! Plot data is two whitespace-separated columns, `ln_s ln_count`, with a
//! `#` header line; fit results go to a JSON sidecar next to it.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::EcdfPoint;

pub fn write_plot_data<W: Write>(mut out: W, points: &[EcdfPoint]) -> std::io::Result<()> {
    writeln!(out, "# ln_s ln_count")?;
    for p in points {
        writeln!(out, "{:.12} {:.12}", (p.s as f64).ln(), (p.count as f64).ln())?;
    }
    out.flush()
}

pub fn write_ccdf_csv<W: Write>(out: W, points: &[EcdfPoint]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ccdf_csv<R: Read>(input: R) -> Result<Vec<EcdfPoint>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Paths written by [`write_plot_files`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlotFiles {
    pub plot: PathBuf,
    pub sidecar: PathBuf,
    pub csv: PathBuf,
}

/// Writes `<stem>.dat`, `<stem>.json` and `<stem>.csv` into `dir`.
pub fn write_plot_files<T: Serialize>(
    dir: &Path,
    stem: &str,
    points: &[EcdfPoint],
    sidecar: &T,
) -> std::io::Result<PlotFiles> {
    std::fs::create_dir_all(dir)?;
    let files = PlotFiles {
        plot: dir.join(format!("{stem}.dat")),
        sidecar: dir.join(format!("{stem}.json")),
        csv: dir.join(format!("{stem}.csv")),
    };
    write_plot_data(std::io::BufWriter::new(std::fs::File::create(&files.plot)?), points)?;
    let json = serde_json::to_vec_pretty(sidecar).map_err(std::io::Error::other)?;
    std::fs::write(&files.sidecar, json)?;
    write_ccdf_csv(std::fs::File::create(&files.csv)?, points).map_err(std::io::Error::other)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_data_columns() {
        let pts = [EcdfPoint { s: 1, count: 4 }, EcdfPoint { s: 5, count: 1 }];
        let mut buf = Vec::new();
        write_plot_data(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 2);
        assert!((rows[0][1] - 4f64.ln()).abs() < 1e-12 && rows[1][1] == 0.0);
    }

    #[test]
    fn csv_round_trip_and_files() {
        let pts = vec![EcdfPoint { s: 2, count: 9 }, EcdfPoint { s: 3, count: 1 }];
        let mut buf = Vec::new();
        write_ccdf_csv(&mut buf, &pts).unwrap();
        assert!(buf.starts_with(b"s,count\n"));
        assert_eq!(read_ccdf_csv(&buf[..]).unwrap(), pts);

        let dir = tempfile::tempdir().unwrap();
        let files = write_plot_files(dir.path(), "x", &pts, &serde_json::json!({"k": 1})).unwrap();
        assert!(files.plot.exists() && files.sidecar.exists() && files.csv.exists());
    }
}
