#![no_main]

use libfuzzer_sys::fuzz_target;
use lrtrunc::config::KernelSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(spec) = KernelSpec::parse(s) {
            assert_eq!(KernelSpec::parse(&spec.to_string()).as_ref(), Ok(&spec));
            let _ = spec.build();
        }
    }
});
