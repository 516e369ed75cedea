use std::io::Write;

use super::sparse::TraceRow;
use super::synthetic::EstimatorReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::invalid(
                "format",
                format!("expected csv or json, got {other:?}"),
            )),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One row per estimator, header
/// `estimator,n,k,samples,bias,variance,mean_error,error_std,wall_time_ms,master_seed`.
pub fn write_reports<W: Write>(
    out: W,
    reports: &[EstimatorReport],
    format: ReportFormat,
) -> Result<()> {
    match format {
        ReportFormat::Csv => write_csv(out, reports),
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, reports)
                .map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out)?;
            Ok(())
        }
    }
}

fn write_csv<W: Write, T: serde::Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

/// Header `step,rmse,map_overlap_with_planted`.
pub fn write_trace<W: Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    write_csv(out, trace)
}

pub fn read_reports_csv<R: std::io::Read>(input: R) -> Result<Vec<EstimatorReport>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}
