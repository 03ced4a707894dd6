#![no_main]

use libfuzzer_sys::fuzz_target;
use lrdwaved::io::read_kernel_table;

fuzz_target!(|data: &[u8]| {
    // Both with and without the dip so the grid checks run either way.
    let _ = read_kernel_table(data, None);
    let _ = read_kernel_table(data, Some(0.5));
});
