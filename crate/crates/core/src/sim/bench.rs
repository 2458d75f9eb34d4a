use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::oram::{self, HouseholdRecord, OramClient, OramConfig, OramError, OramServer, Variant};

/// Mean cost of one ORAM access (a read or a write) for one variant and
/// size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub variant: String,
    #[serde(rename = "N")]
    pub n: u32,
    pub bytes_to_client: f64,
    pub bytes_to_server: f64,
    pub server_ops: f64,
    /// Seconds.
    pub wall_time: f64,
}

impl BenchResult {
    pub fn bytes(&self) -> f64 {
        self.bytes_to_client + self.bytes_to_server
    }
}

/// Performs `pairs` read+write pairs on random households of a fresh
/// database of `n` records.
pub fn bench_cell(variant: Variant, n: u32, pairs: u32, seed: u64) -> Result<BenchResult, OramError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ u64::from(n) ^ (u64::from(variant.code()) << 40));
    let (key, db) = oram::init(OramConfig::new(variant, n), &mut rng)?;
    let client = OramClient::new(&key);
    let mut server = OramServer::new(db);
    let start = Instant::now();
    for _ in 0..pairs {
        let id = rng.gen_range(0..n);
        let rec = client.read(&mut server, id, &mut rng)?;
        let next = HouseholdRecord { balance: rec.balance.wrapping_sub(1), ctr: rec.ctr.wrapping_add(1), ..rec };
        client.write(&mut server, id, next, &mut rng)?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let stats = server.stats();
    let accesses = f64::from(2 * pairs.max(1));
    Ok(BenchResult {
        variant: variant.name().to_owned(),
        n,
        bytes_to_client: stats.bytes_to_client as f64 / accesses,
        bytes_to_server: stats.bytes_to_server as f64 / accesses,
        server_ops: stats.server_ops as f64 / accesses,
        wall_time: elapsed / accesses,
    })
}

/// Every (variant, size) cell, measured in parallel and returned in grid
/// order.
pub fn bench_grid(variants: &[Variant], sizes: &[u32], pairs: u32, seed: u64) -> Result<Vec<BenchResult>, OramError> {
    let cells: Vec<(Variant, u32)> = variants.iter().flat_map(|&v| sizes.iter().map(move |&n| (v, n))).collect();
    cells.into_par_iter().map(|(v, n)| bench_cell(v, n, pairs, seed)).collect()
}

/// Smallest measured size from which `b` moves fewer bytes than `a` at
/// every larger size, provided `a` is cheaper at every smaller one.
pub fn crossover(results: &[BenchResult], a: Variant, b: Variant) -> Option<u32> {
    let mut sizes: Vec<u32> = results.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let cost = |v: Variant, n: u32| results.iter().find(|r| r.variant == v.name() && r.n == n).map(BenchResult::bytes);
    let b_cheaper: Vec<bool> = sizes.iter().map(|&n| Some(cost(b, n)? < cost(a, n)?)).collect::<Option<_>>()?;
    let first = b_cheaper.iter().position(|&c| c)?;
    (first > 0 && b_cheaper[first..].iter().all(|&c| c)).then_some(sizes[first])
}

pub fn write_bench<W: std::io::Write>(out: W, results: &[BenchResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bench<R: std::io::Read>(input: R) -> csv::Result<Vec<BenchResult>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
