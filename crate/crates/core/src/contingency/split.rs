use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::table::ContingencyTable;

/// Distributes every unit count of a non-negative table to a uniformly random
/// client. The returned tables sum cell-wise to `table`.
pub fn split_across_clients(table: &ContingencyTable, n: usize, seed: u64) -> Vec<ContingencyTable> {
    assert!(n >= 1, "need at least one client");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = ContingencyTable::zeros(table.rows(), table.cols()).expect("shape already validated");
    let mut parts = vec![zero; n];
    for row in 0..table.rows() {
        for col in 0..table.cols() {
            let v = table.get(row, col);
            let (units, sign) = if v >= 0 { (v, 1) } else { (-v, -1) };
            for _ in 0..units {
                parts[rng.random_range(0..n)].add_to(row, col, sign);
            }
        }
    }
    parts
}
