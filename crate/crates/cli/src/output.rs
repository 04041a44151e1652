use std::path::Path;

use rayon::prelude::*;
use serde_json::Value;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "NaN".into()
    }
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

/// Files and a JSON summary produced by one command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
}

impl CommandOutput {
    pub fn write_to(&self, dir: &Path, summary_name: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        let mut text = serde_json::to_string_pretty(&self.summary).expect("serialisable summary");
        text.push('\n');
        std::fs::write(dir.join(summary_name), text)
    }
}

/// Ordered parallel map on a pool of `jobs` threads. Results land in
/// input order whatever the thread count.
pub fn par_map<T, R, F>(jobs: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(|| items.into_par_iter().map(f).collect())
}
