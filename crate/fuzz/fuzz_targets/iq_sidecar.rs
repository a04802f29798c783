#![no_main]

use libfuzzer_sys::fuzz_target;

use isac_core::capture::IqSidecar;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(sidecar) = IqSidecar::parse_str(text) {
        // accepted sidecars must round-trip through their own renderer
        let again = IqSidecar::parse_str(&sidecar.render()).unwrap();
        assert_eq!(again, sidecar);
    }
});
