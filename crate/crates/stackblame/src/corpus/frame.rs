//! Symbolized stack-frame parsing and formatting.
//!
//! The frame grammar is `binary!namespace::method+0xOFF` where the namespace
//! is every `::`-separated segment except the last and the `+0x` offset is
//! optional. Templated segments such as `[IDXGISwapChain4]` stay inside the
//! namespace. Parsing never fails: text that does not fit the grammar comes
//! back with unknown flags set and the raw text preserved.

/// One parsed stack frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    /// Module file name, e.g. `msedge.dll`. Empty when unknown.
    pub binary: String,
    /// `::`-joined namespace path, possibly empty.
    pub namespace: String,
    /// Method identifier, possibly empty or the literal `unknown`.
    pub method: String,
    /// Trailing byte offset from `+0x<hex>`, when present.
    pub offset: Option<u64>,
    /// Original frame text (whitespace-trimmed).
    pub raw: String,
    /// Set when no binary could be extracted.
    pub binary_unknown: bool,
    /// Set when no method could be extracted.
    pub method_unknown: bool,
}

impl Frame {
    /// Builds a frame from parts; `raw` is the canonical formatted text.
    pub fn from_parts(binary: &str, namespace: &str, method: &str, offset: Option<u64>) -> Frame {
        let mut frame = Frame {
            binary: binary.to_string(),
            namespace: namespace.to_string(),
            method: method.to_string(),
            offset,
            raw: String::new(),
            binary_unknown: binary.is_empty(),
            method_unknown: method.is_empty(),
        };
        frame.raw = format_frame(&frame);
        frame
    }

    /// Key identifying a method across stacks: `binary!namespace::method`,
    /// offset ignored.
    pub fn method_key(&self) -> String {
        if self.namespace.is_empty() {
            format!("{}!{}", self.binary, self.method)
        } else {
            format!("{}!{}::{}", self.binary, self.namespace, self.method)
        }
    }

    /// True when binary, namespace, and method are all missing.
    pub fn is_empty(&self) -> bool {
        self.binary.is_empty() && self.namespace.is_empty() && self.method.is_empty()
    }
}

/// Parses a symbolized frame string. Every string parses; text without a
/// `!` separator yields a frame with both unknown flags set and `raw`
/// preserved.
pub fn parse_frame(text: &str) -> Frame {
    let raw = text.trim().to_string();

    let Some(bang) = raw.find('!') else {
        return Frame {
            binary: String::new(),
            namespace: String::new(),
            method: String::new(),
            offset: None,
            raw,
            binary_unknown: true,
            method_unknown: true,
        };
    };

    let binary = raw[..bang].to_string();
    let mut symbol = &raw[bang + 1..];

    let mut offset = None;
    if let Some(plus) = symbol.rfind("+0x") {
        let hex = &symbol[plus + 3..];
        if !hex.is_empty() && hex.chars().all(|c| c.is_ascii_hexdigit()) {
            if let Ok(value) = u64::from_str_radix(hex, 16) {
                offset = Some(value);
                symbol = &symbol[..plus];
            }
        }
    }

    let (namespace, method) = match symbol.rfind("::") {
        Some(sep) => (symbol[..sep].to_string(), symbol[sep + 2..].to_string()),
        None => (String::new(), symbol.to_string()),
    };

    Frame {
        binary_unknown: binary.is_empty(),
        method_unknown: method.is_empty(),
        binary,
        namespace,
        method,
        offset,
        raw,
    }
}

/// Formats a frame back to its symbolized text. Inverse of [`parse_frame`]
/// on its own output; fully-unknown frames pass their raw text through.
pub fn format_frame(frame: &Frame) -> String {
    if frame.binary_unknown && frame.method_unknown && frame.is_empty() {
        return frame.raw.clone();
    }
    let mut out = String::with_capacity(frame.raw.len().max(16));
    out.push_str(&frame.binary);
    out.push('!');
    if !frame.namespace.is_empty() {
        out.push_str(&frame.namespace);
        out.push_str("::");
    }
    out.push_str(&frame.method);
    if let Some(off) = frame.offset {
        out.push_str(&format!("+0x{off:x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_namespaced_frame() {
        let f = parse_frame("msedge.dll!gl::GLSurfaceAdapter::PostSubBuffer");
        assert_eq!(f.binary, "msedge.dll");
        assert_eq!(f.namespace, "gl::GLSurfaceAdapter");
        assert_eq!(f.method, "PostSubBuffer");
        assert_eq!(f.offset, None);
        assert!(!f.binary_unknown && !f.method_unknown);
    }

    #[test]
    fn parses_bare_method_frame() {
        let f = parse_frame("igd10iumd64.dll!OpenAdapter10_2");
        assert_eq!(f.binary, "igd10iumd64.dll");
        assert_eq!(f.namespace, "");
        assert_eq!(f.method, "OpenAdapter10_2");
    }

    #[test]
    fn templated_segment_stays_in_namespace() {
        let f = parse_frame("dxgi.dll!CDXGISwapChain::[IDXGISwapChain4]::Present1");
        assert_eq!(f.namespace, "CDXGISwapChain::[IDXGISwapChain4]");
        assert_eq!(f.method, "Present1");
    }

    #[test]
    fn parses_offset() {
        let f = parse_frame("ntdll.dll!RtlUserThreadStart+0x21");
        assert_eq!(f.method, "RtlUserThreadStart");
        assert_eq!(f.offset, Some(0x21));
        assert_eq!(format_frame(&f), "ntdll.dll!RtlUserThreadStart+0x21");
    }

    #[test]
    fn bad_offset_stays_in_method() {
        let f = parse_frame("a.dll!Foo+0xzz");
        assert_eq!(f.method, "Foo+0xzz");
        assert_eq!(f.offset, None);
    }

    #[test]
    fn garbage_preserved_with_unknown_flags() {
        let f = parse_frame("garbage");
        assert_eq!(f.raw, "garbage");
        assert!(f.binary_unknown && f.method_unknown);
        assert_eq!(format_frame(&f), "garbage");
    }

    #[test]
    fn empty_symbol_flags_method_unknown() {
        let f = parse_frame("bin.dll!");
        assert_eq!(f.binary, "bin.dll");
        assert!(f.method_unknown);
        assert!(!f.binary_unknown);
    }

    #[test]
    fn formats_elide_empty_namespace() {
        let f = Frame::from_parts("bin.dll", "", "Method", None);
        assert_eq!(format_frame(&f), "bin.dll!Method");
    }

    #[test]
    fn format_matches_figure_style_frame() {
        let f = Frame::from_parts("d3d11.dll", "NDXGI::CDevice", "RotateResourceIdentities", None);
        assert_eq!(format_frame(&f), "d3d11.dll!NDXGI::CDevice::RotateResourceIdentities");
    }

    #[test]
    fn round_trip_is_stable() {
        for text in [
            "msedge.dll!gl::GLSurfaceAdapter::PostSubBuffer",
            "igd10iumd64.dll!OpenAdapter10_2",
            "ntdll.dll!RtlUserThreadStart+0x2f",
            "kernel32.dll!BaseThreadInitThunk+0x14",
            "!OrphanSymbol",
            "noseparator",
        ] {
            let parsed = parse_frame(text);
            assert_eq!(format_frame(&parsed), text);
            let reparsed = parse_frame(&format_frame(&parsed));
            assert_eq!(parsed, reparsed);
        }
    }

    #[test]
    fn whitespace_is_normalized() {
        let f = parse_frame("  a.dll!Ns::Fn  ");
        assert_eq!(f.raw, "a.dll!Ns::Fn");
        assert_eq!(format_frame(&f), "a.dll!Ns::Fn");
    }
}
