use std::collections::HashMap;

use qrir::adapt::{CodeSelection, Scheme};
use qrir::ldpc::CodeRate;
use qrir::metrics::{aggregate, FrameCsv, SecretKeyParams, SummaryCsv};
use qrir::session::FrameRecord;

const ELL: usize = 32000;

fn fixture_records() -> Vec<FrameRecord> {
    let mut reader = csv::Reader::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/metrics_block.csv")).unwrap();
    reader
        .records()
        .map(|row| {
            let row = row.unwrap();
            let num = |i: usize| row[i].parse::<usize>().unwrap();
            let rate = CodeRate::from_percent(row[1].parse().unwrap()).unwrap();
            let verified = &row[5] == "1";
            let qber = (!row[6].is_empty()).then(|| row[6].parse::<f64>().unwrap());
            FrameRecord {
                frame_id: num(0) as u32,
                scheme: Scheme::AdaptiveAsym,
                success: verified,
                verified,
                iterations_total: num(7),
                rounds_additional: 0,
                d_total: num(4),
                d_punctured: 0,
                selection: CodeSelection {
                    rate,
                    punctured: num(2),
                    shortened: num(3),
                    qber_hat: 0.03,
                },
                ell_frame: ELL,
                syndrome_len: rate.syndrome_len(ELL),
                measured_qber: qber,
                qber_true: qber,
                burst: false,
                abort: None,
                elapsed_ms: row[8].parse().unwrap(),
            }
        })
        .collect()
}

fn expected() -> HashMap<String, f64> {
    include_str!("fixtures/metrics_expected.txt")
        .lines()
        .map(|l| {
            let (k, v) = l.split_once(' ').unwrap();
            (k.to_string(), v.parse().unwrap())
        })
        .collect()
}

fn close(name: &str, got: f64, want: f64) {
    let tol = 1e-12 * want.abs().max(1.0);
    assert!((got - want).abs() <= tol, "{name}: {got} vs {want}");
}

#[test]
fn block_summary_matches_reference() {
    let params = SecretKeyParams {
        kappa1_lower: 0.9,
        ..SecretKeyParams::default()
    };
    let s = aggregate(&fixture_records(), &params, 0.25).unwrap();
    let want = expected();
    assert_eq!(s.frames, 50);
    close("fer", s.fer, want["fer"]);
    close("mean_f_ec", s.mean_f_ec.unwrap(), want["mean_f_ec"]);
    close("std_f_ec", s.std_f_ec.unwrap(), want["std_f_ec"]);
    close("mean_iterations", s.mean_iterations.unwrap(), want["mean_iterations"]);
    close("mean_qber", s.mean_qber.unwrap(), want["mean_qber"]);
    assert_eq!(s.ell_block as f64, want["ell_block"]);
    close("l_sec", s.l_sec, want["l_sec"]);
    close("tau_s", s.tau_s, want["tau_s"]);
    close("r_sec", s.r_sec.unwrap(), want["r_sec"]);
}

#[test]
fn csv_reports_have_one_row_per_frame() {
    let records = fixture_records();
    let mut frames = Vec::new();
    {
        let mut w = FrameCsv::new(&mut frames);
        for r in &records {
            w.write(r).unwrap();
        }
        w.flush().unwrap();
    }
    let mut reader = csv::Reader::from_reader(frames.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "frame_id", "scheme", "qber_true", "qber_hat", "rate", "p", "s", "d_total", "rounds_additional",
            "iterations_total", "success", "verified", "elapsed_ms", "f_ec"
        ]
    );
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 50);
    // Failed frames have no efficiency.
    for (row, r) in rows.iter().zip(&records) {
        assert_eq!(row[13].is_empty(), !r.verified || r.measured_qber == Some(0.0));
    }

    let summary = aggregate(&records, &SecretKeyParams::default(), 0.0).unwrap();
    let mut out = Vec::new();
    {
        let mut w = SummaryCsv::new(&mut out);
        w.write(Scheme::AdaptiveAsym, "0.03", None, &summary).unwrap();
        w.flush().unwrap();
    }
    assert_eq!(csv::Reader::from_reader(out.as_slice()).records().count(), 1);
}
