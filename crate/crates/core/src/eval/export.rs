use std::io::{BufRead, Write};

use super::{InterpolationGrid, MetricsRecord};
use crate::error::{Error, Result};

/// Name under which every artifact records the hash of its run's config.
pub const FINGERPRINT_KEY: &str = "config_sha256";

/// A header object carrying the fingerprint, then one record per line.
pub fn write_metrics_jsonl<W: Write>(mut w: W, fingerprint: &str, records: &[MetricsRecord]) -> Result<()> {
    writeln!(w, "{{\"{FINGERPRINT_KEY}\":\"{fingerprint}\"}}")?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads back what [`write_metrics_jsonl`] wrote: the fingerprint and the records.
pub fn read_metrics_jsonl<R: BufRead>(r: R) -> Result<(String, Vec<MetricsRecord>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::TruncatedFile("missing fingerprint header".into()))??;
    let header: serde_json::Value = serde_json::from_str(&header)?;
    let fingerprint = header
        .get(FINGERPRINT_KEY)
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::TruncatedFile("missing fingerprint header".into()))?
        .to_string();
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok((fingerprint, records))
}

/// `# config_sha256=<hex>` then a header row and one row per record.
pub fn write_metrics_csv<W: Write>(mut w: W, fingerprint: &str, records: &[MetricsRecord]) -> Result<()> {
    writeln!(w, "# {FINGERPRINT_KEY}={fingerprint}")?;
    let mut out = csv::Writer::from_writer(w);
    if records.is_empty() {
        out.write_record([
            "iteration",
            "d_loss",
            "g_loss",
            "info_term",
            "avg_biased_loglik",
            "prior_entropy",
            "mode_coverage",
            "real_slot_fraction",
        ])?;
    }
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Tiles the grid's square images into one plain (P2) grayscale image,
/// one pixel of gap between cells. Pixel values are clamped to `[0, 1]`.
pub fn write_grid_pgm<W: Write>(mut w: W, fingerprint: &str, grid: &InterpolationGrid, side: usize) -> Result<()> {
    if side * side != grid.samples.cols() {
        return Err(Error::DimensionMismatch {
            expected: side * side,
            got: grid.samples.cols(),
        });
    }
    let span = grid.grid * (side + 1) - 1;
    let mut canvas = vec![0u8; span * span];
    for gr in 0..grid.grid {
        for gc in 0..grid.grid {
            let img = grid.cell(gr, gc).1;
            for y in 0..side {
                for x in 0..side {
                    let v = (img[y * side + x].clamp(0.0, 1.0) * 255.0).round() as u8;
                    canvas[(gr * (side + 1) + y) * span + gc * (side + 1) + x] = v;
                }
            }
        }
    }
    writeln!(w, "P2")?;
    writeln!(w, "# {FINGERPRINT_KEY}={fingerprint}")?;
    writeln!(w, "{span} {span}")?;
    writeln!(w, "255")?;
    for row in canvas.chunks(span) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// One line per cell: `row,col,slot,x0,x1,...`.
pub fn write_grid_csv<W: Write>(mut w: W, fingerprint: &str, grid: &InterpolationGrid) -> Result<()> {
    writeln!(w, "# {FINGERPRINT_KEY}={fingerprint}")?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["row".to_string(), "col".to_string(), "slot".to_string()];
    header.extend((0..grid.samples.cols()).map(|j| format!("x{j}")));
    out.write_record(&header)?;
    for r in 0..grid.grid {
        for c in 0..grid.grid {
            let (slot, x) = grid.cell(r, c);
            let mut rec = vec![r.to_string(), c.to_string(), slot.to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn record(i: u64) -> MetricsRecord {
        MetricsRecord {
            iteration: i,
            d_loss: 1.25 + i as f64,
            g_loss: -0.5,
            info_term: -0.1,
            avg_biased_loglik: Some(0.3),
            prior_entropy: 2.0,
            mode_coverage: Some(0.875),
            real_slot_fraction: 0.5,
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let mut buf = Vec::new();
        let recs = vec![record(0), record(10)];
        write_metrics_jsonl(&mut buf, "abc", &recs).unwrap();
        let (fp, back) = read_metrics_jsonl(&buf[..]).unwrap();
        assert_eq!(fp, "abc");
        assert_eq!(back, recs);
        assert!(String::from_utf8(buf).unwrap().starts_with("{\"config_sha256\":\"abc\"}\n"));
    }

    #[test]
    fn csv_has_fingerprint_and_header() {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, "ff", &[record(3)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_sha256=ff");
        assert!(lines[1].starts_with("iteration,d_loss"));
        assert!(lines[2].starts_with("3,4.25"));
        let mut empty = Vec::new();
        write_metrics_csv(&mut empty, "ff", &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().lines().count(), 2);
    }

    #[test]
    fn pgm_layout() {
        let grid = InterpolationGrid {
            grid: 2,
            samples: Matrix::from_vec(4, 4, vec![1.0; 16]).unwrap(),
            snapped: vec![0, 1, 2, 3],
        };
        let mut buf = Vec::new();
        write_grid_pgm(&mut buf, "00", &grid, 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(&lines[..4], &["P2", "# config_sha256=00", "5 5", "255"]);
        assert_eq!(lines[4], "255 255 0 255 255");
        assert_eq!(lines[6], "0 0 0 0 0");
        assert!(write_grid_pgm(Vec::new(), "00", &grid, 3).is_err());
    }

    #[test]
    fn grid_csv_rows() {
        let grid = InterpolationGrid {
            grid: 2,
            samples: Matrix::from_vec(4, 2, vec![0.5; 8]).unwrap(),
            snapped: vec![4, 5, 6, 7],
        };
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, "aa", &grid).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "row,col,slot,x0,x1");
        assert_eq!(lines[5], "1,1,7,0.5,0.5");
    }
}
