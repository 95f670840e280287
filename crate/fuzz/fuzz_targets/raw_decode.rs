#![no_main]

use libfuzzer_sys::fuzz_target;
use sake_pks::raw::{decode_raw, encode_raw};

fuzz_target!(|data: &[u8]| {
    let Ok((vol, header)) = decode_raw(data) else { return };
    // Decoded meta is always re-encodable (nonempty keys, no '=' or newline
    // in keys, no dimension-key collisions) and the payload widens f32 pairs
    // to f64, so one more encode/decode cycle must reproduce everything bit
    // for bit.
    let bytes = encode_raw(&vol, &header.meta).expect("decoded header re-encodes");
    let (vol2, header2) = decode_raw(&bytes).expect("re-encoded bytes decode");
    assert_eq!(header, header2);
    assert_eq!(
        (vol.n_coils(), vol.rows(), vol.cols()),
        (vol2.n_coils(), vol2.rows(), vol2.cols())
    );
    for (a, b) in vol.data().iter().zip(vol2.data().iter()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
});
