#![no_main]

use libfuzzer_sys::fuzz_target;
use luminal::io::read_density_csv;

fuzz_target!(|data: &[u8]| {
    let _ = read_density_csv(data);
});
