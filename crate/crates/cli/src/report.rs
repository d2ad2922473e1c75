use std::path::PathBuf;

use concat_fec::exit::p_to_mean;
use serde_json::Value;

use crate::manifest::{write_cited, RunManifest};
use crate::{CliError, Globals};

/// Reference output BER for the coding-gain column.
pub const NCG_REFERENCE_BER: f64 = 1e-15;

/// Es/N0 in dB at which uncoded Gray QPSK reaches `ber`.
pub fn uncoded_snr_db(ber: f64) -> f64 {
    // Uncoded error is Q(sqrt(Es/N0)), and a consistent Gaussian of mean m
    // has error Q(sqrt(m/2)), so Es/N0 = m/2.
    let m = p_to_mean(ber).expect("reference BER is a probability");
    10.0 * (m / 2.0).log10()
}

/// Net coding gain of a system of rate `r` operating at `snr_db`, assuming
/// the outer code takes its input threshold down to the reference BER.
pub fn net_coding_gain(snr_db: f64, r: f64) -> f64 {
    uncoded_snr_db(NCG_REFERENCE_BER) - (snr_db - 10.0 * r.log10())
}

pub const HEADER: [&str; 14] = [
    "source", "outer", "dc_bar", "nu", "l0", "r_cat", "snr_db", "gap_db", "combined_ber", "threshold",
    "pass", "iters", "eta_i", "eta",
];

fn field<'a>(v: &'a Value, ptr: &str, src: &str) -> Result<&'a Value, CliError> {
    v.pointer(ptr)
        .ok_or_else(|| CliError::usage(format!("{src}: missing {ptr}")))
}

fn num(v: &Value, ptr: &str, src: &str) -> Result<f64, CliError> {
    field(v, ptr, src)?
        .as_f64()
        .ok_or_else(|| CliError::usage(format!("{src}: {ptr} is not a number")))
}

/// One row per operating point of every `run.json` given.
pub fn report(g: &Globals, inputs: &[PathBuf]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("report", g.config.as_deref(), g.seed.unwrap_or(0), &g.out);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for path in inputs {
        manifest.add_input(path)?;
        let src = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{src}: {e}")))?;
        let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{src}: {e}")))?;
        let run = doc.get("report").unwrap_or(&doc);
        let r_cat = num(run, "/r_cat", &src)?;
        let points = field(run, "/points", &src)?
            .as_array()
            .ok_or_else(|| CliError::usage(format!("{src}: points is not a list")))?;
        for p in points {
            let snr_db = num(p, "/snr_db", &src)?;
            let pass = field(p, "/adjudication/pass", &src)?.as_bool().unwrap_or(false);
            rows.push(vec![
                src.clone(),
                field(run, "/outer/name", &src)?.as_str().unwrap_or("").to_string(),
                format!("{}", num(run, "/ensemble/dc_bar", &src)?),
                format!("{:.4}", num(run, "/ensemble/nu", &src)?),
                format!("{:.4}", num(run, "/ensemble/l/0", &src)?),
                format!("{r_cat:.6}"),
                format!("{snr_db:.4}"),
                format!("{:.2}", num(p, "/gap_db", &src)?),
                format!("{:.4e}", num(p, "/adjudication/ber", &src)?),
                format!("{:.4e}", num(p, "/adjudication/threshold", &src)?),
                pass.to_string(),
                format!("{}", num(run, "/iters", &src)?),
                format!("{:.2}", num(run, "/eta_i", &src)?),
                format!("{:.2}", num(run, "/eta", &src)?),
                format!("{:.2}", net_coding_gain(snr_db, r_cat)),
            ]);
        }
    }
    let hash = manifest.write(&g.out)?;
    let mut body = format!(
        "# ncg_db: uncoded Gray-QPSK Es/N0 at BER {NCG_REFERENCE_BER:e} ({:.3} dB) minus the operating Es/N0 less 10 log10(r_cat)\n",
        uncoded_snr_db(NCG_REFERENCE_BER)
    )
    .into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut body);
        let mut header: Vec<&str> = HEADER.to_vec();
        header.push("ncg_db");
        w.write_record(&header).map_err(|e| CliError::usage(e.to_string()))?;
        for r in &rows {
            w.write_record(r).map_err(|e| CliError::usage(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::usage(e.to_string()))?;
    }
    print!("{}", String::from_utf8_lossy(&body));
    write_cited(&g.out.join("summary.csv"), &hash, &body)
}
