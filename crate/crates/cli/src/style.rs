//! ANSI styling for terminal output; off when `MINDPROBE_NO_COLOR` is set or the stream
//! is not a terminal.

use std::io::IsTerminal;

fn enabled(stream_is_tty: bool) -> bool {
    stream_is_tty && std::env::var_os("MINDPROBE_NO_COLOR").is_none()
}

fn paint(text: &str, code: &str, tty: bool) -> String {
    if enabled(tty) {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

pub fn bold(text: &str) -> String {
    paint(text, "1", std::io::stdout().is_terminal())
}

pub fn error_label() -> String {
    paint("error:", "1;31", std::io::stderr().is_terminal())
}
