#![no_main]

use libfuzzer_sys::fuzz_target;
use lrdwaved::io::read_dataset_csv;

fuzz_target!(|data: &[u8]| {
    let _ = read_dataset_csv(data);
});
