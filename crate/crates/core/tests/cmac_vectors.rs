use mqrng_core::extractors::{aes128_encrypt, cmac_tag};

fn h(s: &str) -> Vec<u8> {
    hex::decode(s).unwrap()
}

fn block(s: &str) -> [u8; 16] {
    h(s).try_into().unwrap()
}

const RFC_KEY: &str = "2b7e151628aed2a6abf7158809cf4f3c";
const RFC_MSG: &str = "6bc1bee22e409f96e93d7e117393172a\
                       ae2d8a571e03ac9c9eb76fac45af8e51\
                       30c81c46a35ce411e5fbc1191a0a52ef\
                       f69f2445df4f9b17ad2b417be66c3710";

#[test]
fn fips197_appendix_c1() {
    let ct = aes128_encrypt(
        block("00112233445566778899aabbccddeeff"),
        block("000102030405060708090a0b0c0d0e0f"),
    );
    assert_eq!(hex::encode(ct), "69c4e0d86a7b0430d8cdb78070b4c55a");
}

#[test]
fn rfc4493_examples() {
    let msg = h(RFC_MSG);
    let key = block(RFC_KEY);
    let cases = [
        (0, "bb1d6929e95937287fa37d129b756746"),
        (16, "070a16b46b4d4144f79bdd9dd04a287c"),
        (40, "dfa66747de9ae63030ca32611497c827"),
        (64, "51f0bebf7e3b9d92fc49741779363cfe"),
    ];
    for (len, tag) in cases {
        assert_eq!(hex::encode(cmac_tag(&msg[..len], key)), tag, "length {len}");
    }
}
