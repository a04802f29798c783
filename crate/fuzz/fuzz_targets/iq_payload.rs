#![no_main]

use libfuzzer_sys::fuzz_target;

use isac_core::capture::{decode_payload, IqSidecar};

// First 8 bytes steer the declared sample count and scale; the rest is the
// payload. decode_payload must reject any count/length mismatch and never
// panic or allocate past the input.
fuzz_target!(|data: &[u8]| {
    if data.len() < 8 {
        return;
    }
    let declared = u32::from_le_bytes([data[0], data[1], data[2], data[3]]) as usize;
    let scale_raw = u32::from_le_bytes([data[4], data[5], data[6], data[7]]);
    let payload = &data[8..];
    let sidecar = IqSidecar {
        sample_rate: 62.5e6,
        sample_count: declared % (payload.len() / 4 + 2),
        polarization: "V".into(),
        scale: (scale_raw as f64 + 1.0) / 1e6,
    };
    if let Ok(buffer) = decode_payload(payload, &sidecar) {
        assert_eq!(buffer.len(), sidecar.sample_count);
    }
});
