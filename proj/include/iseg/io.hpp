// ASCII PGM masks and "PM" text probability maps.
//
//   PGM: "P2", width, height, maxval (255); foreground 255, background 0.
//        Any nonzero sample reads back as foreground.
//   PM:  first line "PM <height> <width>", then height rows of width floats.
#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "iseg/core.hpp"

namespace iseg::io {

/// Input file could not be read or parsed. Message carries file and line.
class ParseError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Whitespace tokenizer that skips '#' comments and tracks line numbers.
class Tokens {
 public:
  Tokens(std::string text, std::string origin) : text_(std::move(text)), origin_(std::move(origin)) {}

  bool next(std::string& tok) {
    skip();
    if (pos_ >= text_.size()) return false;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '#')
      ++pos_;
    tok = text_.substr(start, pos_ - start);
    return true;
  }

  std::string expect(const char* what) {
    std::string tok;
    if (!next(tok)) fail(std::string("unexpected end of file, expected ") + what);
    return tok;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(origin_ + ":" + std::to_string(line_) + ": " + msg);
  }

  std::size_t line() const { return line_; }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string text_;
  std::string origin_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

inline long parse_int(Tokens& t, const char* what) {
  const std::string tok = t.expect(what);
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    t.fail(std::string("expected integer ") + what + ", got '" + tok + "'");
  }
}

inline double parse_double(Tokens& t, const char* what) {
  const std::string tok = t.expect(what);
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    t.fail(std::string("expected number ") + what + ", got '" + tok + "'");
  }
}

}  // namespace detail

/// Writes to a sibling temp file then renames, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(tmp.string() + ": cannot open for writing");
    out << content;
    if (!out) throw Error(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

inline BinaryMask parse_pgm(const std::string& text, const std::string& origin = "<pgm>") {
  detail::Tokens t(text, origin);
  if (t.expect("magic") != "P2") t.fail("expected PGM magic 'P2'");
  const long w = detail::parse_int(t, "width");
  const long h = detail::parse_int(t, "height");
  const long maxval = detail::parse_int(t, "maxval");
  if (w <= 0 || h <= 0) t.fail("width and height must be positive");
  if (maxval <= 0 || maxval > 65535) t.fail("maxval out of range");
  std::vector<std::uint8_t> v(static_cast<std::size_t>(w * h));
  for (auto& px : v) {
    const long s = detail::parse_int(t, "pixel");
    if (s < 0 || s > maxval) t.fail("pixel value out of range");
    px = s > 0 ? 1 : 0;
  }
  std::string extra;
  if (t.next(extra)) t.fail("trailing data after pixels");
  return BinaryMask(static_cast<std::size_t>(h), static_cast<std::size_t>(w), std::move(v));
}

inline std::string format_pgm(const BinaryMask& m) {
  std::ostringstream os;
  os << "P2\n" << m.width() << ' ' << m.height() << "\n255\n";
  for (std::size_t r = 0; r < m.height(); ++r) {
    for (std::size_t c = 0; c < m.width(); ++c) {
      if (c) os << ' ';
      os << (m.at(r, c) ? 255 : 0);
    }
    os << '\n';
  }
  return os.str();
}

/// Real-valued grid in PM layout. Range checks belong to the caller's type.
template <class Tag>
Grid<double, Tag> parse_pm(const std::string& text, const std::string& origin = "<pm>") {
  detail::Tokens t(text, origin);
  if (t.expect("header") != "PM") t.fail("expected header 'PM <height> <width>'");
  const long h = detail::parse_int(t, "height");
  const long w = detail::parse_int(t, "width");
  if (w <= 0 || h <= 0) t.fail("height and width must be positive");
  std::vector<double> v(static_cast<std::size_t>(w * h));
  for (auto& x : v) {
    x = detail::parse_double(t, "value");
    if (!Tag::valid(x)) t.fail(std::string("value out of range for ") + Tag::name);
  }
  std::string extra;
  if (t.next(extra)) t.fail("trailing data after values");
  return Grid<double, Tag>(static_cast<std::size_t>(h), static_cast<std::size_t>(w), std::move(v));
}

template <class Tag>
std::string format_pm(const Grid<double, Tag>& m) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "PM " << m.height() << ' ' << m.width() << '\n';
  for (std::size_t r = 0; r < m.height(); ++r) {
    for (std::size_t c = 0; c < m.width(); ++c) {
      if (c) os << ' ';
      os << m.at(r, c);
    }
    os << '\n';
  }
  return os.str();
}

inline BinaryMask read_pgm(const std::filesystem::path& p) {
  return parse_pgm(detail::read_all(p), p.string());
}
inline ProbMap read_prob_map(const std::filesystem::path& p) {
  return parse_pm<UnitInterval>(detail::read_all(p), p.string());
}
inline Field read_field(const std::filesystem::path& p) {
  return parse_pm<AnyValue>(detail::read_all(p), p.string());
}

inline void write_pgm(const std::filesystem::path& p, const BinaryMask& m) {
  write_atomic(p, format_pgm(m));
}
template <class Tag>
void write_pm(const std::filesystem::path& p, const Grid<double, Tag>& m) {
  write_atomic(p, format_pm(m));
}

}  // namespace iseg::io
