//! CSV / JSON emission of metrics, speedups, hotspots and period aggregates.
//!
//! Per-block metric CSV columns, in order:
//!
//! ```text
//! block_number,n_total,n_analyzed,independent_count,independent_pct,
//! longest_chain_len,longest_chain_pct,family_count,densest_family_size,
//! total_conflicts,write_write_conflicts,
//! <kind>_analyzed,<kind>_independent   (for every transaction kind)
//! success_count,empty
//! ```
//!
//! Floats are written with two decimals. Rows are ordered by block number.
//! Output is byte-for-byte deterministic for identical inputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use txconflict_core::aggregate::{KindAggregate, MetricStats, PeriodAggregate};
use txconflict_core::hotspot::Hotspot;
use txconflict_core::metrics::{BlockMetrics, KindIndependence};
use txconflict_core::sched::{SpeedupPoint, Workers};
use txconflict_core::TransactionKind;

use crate::{fsio, Error};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` means JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

const BASE_COLUMNS: [&str; 11] = [
    "block_number",
    "n_total",
    "n_analyzed",
    "independent_count",
    "independent_pct",
    "longest_chain_len",
    "longest_chain_pct",
    "family_count",
    "densest_family_size",
    "total_conflicts",
    "write_write_conflicts",
];

fn fixed(v: f64) -> String {
    format!("{v:.2}")
}

pub fn metrics_header() -> Vec<String> {
    let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|c| c.to_string()).collect();
    for kind in TransactionKind::ALL {
        cols.push(format!("{kind}_analyzed"));
        cols.push(format!("{kind}_independent"));
    }
    cols.push("success_count".into());
    cols.push("empty".into());
    cols
}

fn metrics_record(m: &BlockMetrics) -> Vec<String> {
    let mut row = vec![
        m.block_number.to_string(),
        m.n_total.to_string(),
        m.n_analyzed.to_string(),
        m.independent_count.to_string(),
        fixed(m.independent_pct),
        m.longest_chain_len.to_string(),
        fixed(m.longest_chain_pct),
        m.family_count.to_string(),
        m.densest_family_size.to_string(),
        m.total_conflicts.to_string(),
        m.write_write_conflicts.to_string(),
    ];
    for kind in TransactionKind::ALL {
        let k = m.per_kind.get(&kind).copied().unwrap_or_default();
        row.push(k.analyzed.to_string());
        row.push(k.independent.to_string());
    }
    row.push(m.success_count.to_string());
    row.push(m.empty.to_string());
    row
}

fn sorted_by_block(metrics: &[BlockMetrics]) -> Vec<&BlockMetrics> {
    let mut rows: Vec<&BlockMetrics> = metrics.iter().collect();
    rows.sort_by_key(|m| m.block_number);
    rows
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report values serialize");
    out.push(b'\n');
    out
}

pub fn render_metrics(metrics: &[BlockMetrics], format: Format) -> Result<Vec<u8>, Error> {
    let rows = sorted_by_block(metrics);
    match format {
        Format::Csv => csv_bytes(&metrics_header(), rows.into_iter().map(metrics_record)),
        Format::Json => Ok(json_bytes(&rows)),
    }
}

pub fn emit_metrics(metrics: &[BlockMetrics], format: Format, path: &Path) -> Result<(), Error> {
    fsio::write_output(path, &render_metrics(metrics, format)?)
}

/// Reads metrics back from a file written by [`emit_metrics`]; the format is
/// taken from the extension. CSV rows come back without chain ids.
pub fn read_metrics(path: &Path) -> Result<Vec<BlockMetrics>, Error> {
    let text = fsio::read_to_string(path)?;
    match Format::from_path(path) {
        Format::Json => Ok(serde_json::from_str(&text)?),
        Format::Csv => parse_metrics_csv(&text),
    }
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<BlockMetrics>, Error> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let column = |name: &str| header.iter().position(|h| h == name);
    for required in BASE_COLUMNS {
        if column(required).is_none() {
            return Err(Error::structure(format!("metrics CSV lacks column {required}")));
        }
    }

    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field =
            |name: &str| -> Result<Option<&str>, Error> { Ok(column(name).map(|i| record.get(i).unwrap_or(""))) };
        let num = |name: &str| -> Result<usize, Error> {
            let raw = field(name)?.unwrap_or("0");
            raw.parse().map_err(|_| Error::structure(format!("row {}: {name} = {raw:?}", line + 1)))
        };
        let float = |name: &str| -> Result<f64, Error> {
            let raw = field(name)?.unwrap_or("0");
            raw.parse().map_err(|_| Error::structure(format!("row {}: {name} = {raw:?}", line + 1)))
        };
        let mut per_kind = BTreeMap::new();
        for kind in TransactionKind::ALL {
            let analyzed = num(&format!("{kind}_analyzed"))?;
            if analyzed > 0 {
                let independent = num(&format!("{kind}_independent"))?;
                per_kind.insert(kind, KindIndependence { analyzed, independent });
            }
        }
        let n_analyzed = num("n_analyzed")?;
        out.push(BlockMetrics {
            block_number: num("block_number")? as u64,
            n_total: num("n_total")?,
            n_analyzed,
            independent_count: num("independent_count")?,
            independent_pct: float("independent_pct")?,
            longest_chain_len: num("longest_chain_len")?,
            longest_chain_pct: float("longest_chain_pct")?,
            family_count: num("family_count")?,
            densest_family_size: num("densest_family_size")?,
            total_conflicts: num("total_conflicts")?,
            write_write_conflicts: num("write_write_conflicts")?,
            per_kind,
            success_count: num("success_count")?,
            empty: field("empty")?.map_or(n_analyzed == 0, |v| v == "true"),
            longest_chain: Vec::new(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub block_number: u64,
    pub n_analyzed: usize,
    pub workers: Workers,
    pub makespan: usize,
    pub speedup: f64,
}

impl SpeedupRow {
    pub fn new(block_number: u64, n_analyzed: usize, p: &SpeedupPoint) -> Self {
        SpeedupRow { block_number, n_analyzed, workers: p.workers, makespan: p.makespan, speedup: p.speedup }
    }
}

pub fn render_speedups(rows: &[SpeedupRow], format: Format) -> Result<Vec<u8>, Error> {
    let mut rows: Vec<&SpeedupRow> = rows.iter().collect();
    rows.sort_by(|a, b| a.block_number.cmp(&b.block_number).then(a.workers.cmp(&b.workers)));
    match format {
        Format::Json => Ok(json_bytes(&rows)),
        Format::Csv => {
            let header: Vec<String> = ["block_number", "n_analyzed", "workers", "makespan", "speedup"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            csv_bytes(
                &header,
                rows.into_iter().map(|r| {
                    vec![
                        r.block_number.to_string(),
                        r.n_analyzed.to_string(),
                        r.workers.to_string(),
                        r.makespan.to_string(),
                        fixed(r.speedup),
                    ]
                }),
            )
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HotspotRow {
    pub block_number: u64,
    pub rank: usize,
    pub key: String,
    pub reads: usize,
    pub writes: usize,
}

pub fn hotspot_rows(block_number: u64, spots: &[Hotspot]) -> Vec<HotspotRow> {
    spots
        .iter()
        .enumerate()
        .map(|(i, s)| HotspotRow { block_number, rank: i + 1, key: s.key.encode(), reads: s.reads, writes: s.writes })
        .collect()
}

pub fn render_hotspots(rows: &[HotspotRow], format: Format) -> Result<Vec<u8>, Error> {
    let mut rows: Vec<&HotspotRow> = rows.iter().collect();
    rows.sort_by_key(|r| (r.block_number, r.rank));
    match format {
        Format::Json => Ok(json_bytes(&rows)),
        Format::Csv => {
            let header: Vec<String> =
                ["block_number", "rank", "key", "reads", "writes", "total"].iter().map(|s| s.to_string()).collect();
            csv_bytes(
                &header,
                rows.into_iter().map(|r| {
                    vec![
                        r.block_number.to_string(),
                        r.rank.to_string(),
                        r.key.clone(),
                        r.reads.to_string(),
                        r.writes.to_string(),
                        (r.reads + r.writes).to_string(),
                    ]
                }),
            )
        }
    }
}

fn stat_columns(a: &PeriodAggregate) -> [(&'static str, MetricStats); 12] {
    [
        ("n_total", a.n_total),
        ("n_analyzed", a.n_analyzed),
        ("independent_count", a.independent_count),
        ("independent_pct", a.independent_pct),
        ("longest_chain_len", a.longest_chain_len),
        ("longest_chain_pct", a.longest_chain_pct),
        ("family_count", a.family_count),
        ("densest_family_size", a.densest_family_size),
        ("total_conflicts", a.total_conflicts),
        ("write_write_conflicts", a.write_write_conflicts),
        ("write_write_share_pct", a.write_write_share_pct),
        ("success_count", a.success_count),
    ]
}

fn threshold_label(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("gt_{t:.0}")
    } else {
        format!("gt_{t:.2}")
    }
}

/// Aggregates sharing a threshold list, one row each.
pub fn render_aggregates(aggregates: &[PeriodAggregate], format: Format) -> Result<Vec<u8>, Error> {
    if format == Format::Json {
        return Ok(json_bytes(aggregates));
    }
    let thresholds: Vec<f64> =
        aggregates.first().map(|a| a.thresholds.iter().map(|t| t.threshold).collect()).unwrap_or_default();
    if aggregates.iter().any(|a| a.thresholds.iter().map(|t| t.threshold).ne(thresholds.iter().copied())) {
        return Err(Error::structure("aggregates in one CSV must share thresholds"));
    }

    let mut header: Vec<String> =
        ["label", "mode", "blocks", "first_block", "last_block"].iter().map(|s| s.to_string()).collect();
    if let Some(a) = aggregates.first() {
        for (name, _) in stat_columns(a) {
            header.extend(["mean", "min", "max"].iter().map(|s| format!("{name}_{s}")));
        }
    }
    header.extend(thresholds.iter().map(|&t| threshold_label(t)));
    for kind in TransactionKind::ALL {
        header.push(format!("{kind}_blocks"));
        header.push(format!("{kind}_mean_analyzed"));
        header.push(format!("{kind}_independent_pct"));
    }

    let rows = aggregates.iter().map(|a| {
        let mut row = vec![
            a.label.clone(),
            match a.mode {
                txconflict_core::AggregateMode::PerBlock => "per_block".to_string(),
                txconflict_core::AggregateMode::Pooled => "pooled".to_string(),
            },
            a.blocks.to_string(),
            a.first_block.to_string(),
            a.last_block.to_string(),
        ];
        for (_, s) in stat_columns(a) {
            row.extend([fixed(s.mean), fixed(s.min), fixed(s.max)]);
        }
        row.extend(a.thresholds.iter().map(|t| t.blocks.to_string()));
        for kind in TransactionKind::ALL {
            let k: KindAggregate = a.per_kind.get(&kind).copied().unwrap_or_default();
            row.extend([k.blocks.to_string(), fixed(k.mean_analyzed), fixed(k.independent_pct)]);
        }
        row
    });
    csv_bytes(&header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use txconflict_core::aggregate::{aggregate, DEFAULT_THRESHOLDS};
    use txconflict_core::gen::worked_example;
    use txconflict_core::{analyze_block, AggregateMode, AnalysisConfig, Chain};

    fn golden() -> BlockMetrics {
        analyze_block(&worked_example(), &AnalysisConfig::for_chain(Chain::Generic))
    }

    #[test]
    fn worked_example_row() {
        let csv = String::from_utf8(render_metrics(&[golden()], Format::Csv).unwrap()).unwrap();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with(
            "block_number,n_total,n_analyzed,independent_count,independent_pct,longest_chain_len,\
             longest_chain_pct,family_count,densest_family_size,total_conflicts,write_write_conflicts,\
             eth_transfer_analyzed,"
        ));
        let row = lines.next().unwrap();
        assert!(row.starts_with("0,8,8,3,37.50,3,37.50,5,3,6,3,"), "{row}");
        assert!(row.ends_with(",8,3,8,false"), "{row}");
        assert!(lines.next().is_none());
    }

    #[test]
    fn empty_list_is_header_only() {
        let csv = String::from_utf8(render_metrics(&[], Format::Csv).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert_eq!(csv, format!("{}\n", metrics_header().join(",")));
        assert_eq!(render_metrics(&[], Format::Json).unwrap(), b"[]\n");
    }

    #[test]
    fn json_round_trip() {
        let m = golden();
        let bytes = render_metrics(std::slice::from_ref(&m), Format::Json).unwrap();
        let back: Vec<BlockMetrics> = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, [m]);
    }

    #[test]
    fn csv_round_trip_up_to_rounding() {
        let m = golden();
        let bytes = render_metrics(std::slice::from_ref(&m), Format::Csv).unwrap();
        let back = parse_metrics_csv(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(BlockMetrics { longest_chain: Vec::new(), ..m }, back[0]);
    }

    #[test]
    fn rows_sorted_by_block() {
        let mut a = golden();
        a.block_number = 9;
        let b = golden();
        let csv = String::from_utf8(render_metrics(&[a, b], Format::Csv).unwrap()).unwrap();
        let firsts: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(firsts, ["0", "9"]);
    }

    #[test]
    fn aggregate_csv_shape() {
        let agg = aggregate(&[golden()], "demo", &DEFAULT_THRESHOLDS, AggregateMode::PerBlock).unwrap();
        let csv = String::from_utf8(render_aggregates(&[agg], Format::Csv).unwrap()).unwrap();
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), row.len());
        let get = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
        assert_eq!(get("label"), "demo");
        assert_eq!(get("independent_pct_mean"), "37.50");
        assert_eq!(get("gt_40"), "0");
        assert_eq!(get("gt_80"), "0");
        assert_eq!(get("write_write_share_pct_mean"), "50.00");
        assert_eq!(get("generic_independent_pct"), "37.50");
    }

    #[test]
    fn speedup_csv() {
        let rows = [
            SpeedupRow { block_number: 0, n_analyzed: 8, workers: Workers::Unbounded, makespan: 3, speedup: 8.0 / 3.0 },
            SpeedupRow { block_number: 0, n_analyzed: 8, workers: Workers::Bounded(1), makespan: 8, speedup: 1.0 },
        ];
        let csv = String::from_utf8(render_speedups(&rows, Format::Csv).unwrap()).unwrap();
        assert_eq!(csv, "block_number,n_analyzed,workers,makespan,speedup\n0,8,1,8,1.00\n0,8,inf,3,2.67\n");
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("a/b.JSON")), Format::Json);
        assert_eq!(Format::from_path(Path::new("a/b.csv")), Format::Csv);
        assert_eq!(Format::from_path(Path::new("-")), Format::Csv);
    }
}
