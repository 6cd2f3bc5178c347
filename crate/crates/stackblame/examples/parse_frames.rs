//! Walk through the frame grammar: parse symbolized frames, inspect the
//! extracted fields, and show that formatting round-trips.
//!
//! ```sh
//! cargo run --example parse_frames
//! ```

use stackblame::corpus::{format_frame, parse_frame};

fn main() {
    let samples = [
        // A templated graphics frame: the bracketed segment stays in the
        // namespace, the +0x offset is parsed out.
        "msedge.dll!gfx::[IDXGISwapChain4]::Present+0x2f",
        // Driver entry point with no namespace.
        "igd10iumd64.dll!OpenAdapter10_2",
        // Plain OS frame.
        "ntdll.dll!RtlUserThreadStart",
        // Unsymbolized method.
        "d3d11.dll!unknown",
        // Text that does not fit the grammar at all still parses; the raw
        // string is preserved and the unknown flags are set.
        "0x00007ffb2a41c3e1",
        "",
    ];

    for text in samples {
        let frame = parse_frame(text);
        println!("raw:        {:?}", frame.raw);
        println!("  binary:    {:?} (unknown: {})", frame.binary, frame.binary_unknown);
        println!("  namespace: {:?}", frame.namespace);
        println!("  method:    {:?} (unknown: {})", frame.method, frame.method_unknown);
        println!("  offset:    {:?}", frame.offset);
        println!("  key:       {:?}", frame.method_key());

        // Formatting a structurally parsed frame reproduces its text.
        if !frame.binary_unknown {
            assert_eq!(format_frame(&frame), frame.raw);
            println!("  round-trips through format_frame");
        }
        println!();
    }
}
