#![no_main]

use libfuzzer_sys::fuzz_target;
use lrtrunc::percolation::parse_edge_dump;

fuzz_target!(|data: &[u8]| {
    let Some((&dim, rest)) = data.split_first() else { return };
    let dim = usize::from(dim % 4) + 1;
    if let Ok(text) = std::str::from_utf8(rest) {
        if let Ok(edges) = parse_edge_dump(text, dim) {
            assert!(edges.iter().all(|(x, y)| x.len() == dim && y.len() == dim));
        }
    }
});
