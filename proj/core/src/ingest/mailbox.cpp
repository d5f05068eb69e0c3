#include "tw/ingest/mailbox.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tw/error.hpp"
#include "tw/util/csv.hpp"

namespace tw::ingest {
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MalformedMessage, fmt::format("attachment {} not readable", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool ends_with_icase(std::string_view s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace

RawMessage parse_message(const std::string& text, const fs::path& file) {
  RawMessage msg;
  msg.file = file.filename().string();
  std::optional<Micros> date;
  std::vector<std::string> attachment_names;

  std::size_t pos = 0;
  bool in_headers = true;
  while (in_headers && pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = std::min(eol + 1, text.size() + 1);
    if (csv::trim(line).empty()) {
      in_headers = false;
      break;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw Error(Errc::MalformedMessage, fmt::format("{}: header line without ':'", msg.file));
    }
    const std::string key = csv::trim(line.substr(0, colon));
    const std::string value = csv::trim(line.substr(colon + 1));
    if (key == "Subject") {
      msg.subject = value;
    } else if (key == "Date") {
      date = parse_iso8601(value);
      if (!date) throw Error(Errc::MalformedMessage, fmt::format("{}: bad Date '{}'", msg.file, value));
    } else if (key == "To") {
      for (auto& addr : csv::split_line(value)) {
        if (auto a = csv::trim(addr); !a.empty()) msg.to.push_back(a);
      }
    } else if (key == "Attachment") {
      attachment_names.push_back(value);
    }
  }
  if (msg.subject.empty()) throw Error(Errc::MalformedMessage, fmt::format("{}: missing Subject", msg.file));
  if (!date) throw Error(Errc::MalformedMessage, fmt::format("{}: missing Date", msg.file));
  msg.received = *date;
  msg.body = pos <= text.size() ? text.substr(pos) : std::string{};

  for (const auto& name : attachment_names) {
    msg.attachments.push_back(Attachment{name, read_bytes(file.parent_path() / name)});
  }
  return msg;
}

MailboxScan scan_mailbox(const fs::path& dir, const MailboxFilter& filter) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(Errc::IoError, fmt::format("mailbox {} is not a readable directory", dir.string()));
  }
  std::vector<fs::path> files;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".msg") files.push_back(it->path());
  }
  if (ec) throw Error(Errc::IoError, fmt::format("cannot list {}: {}", dir.string(), ec.message()));
  std::sort(files.begin(), files.end());

  MailboxScan scan;
  for (const auto& path : files) {
    RawMessage msg;
    try {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(Errc::MalformedMessage, "unreadable");
      std::ostringstream ss;
      ss << in.rdbuf();
      msg = parse_message(ss.str(), path);
    } catch (const Error& e) {
      spdlog::warn("skipping message {}: {}", path.filename().string(), e.what());
      scan.skipped.push_back(fmt::format("{}: {}", path.filename().string(), e.what()));
      continue;
    }
    if (filter.from && msg.received < *filter.from) continue;
    if (filter.until && msg.received > *filter.until) continue;
    if (filter.recipient && std::find(msg.to.begin(), msg.to.end(), *filter.recipient) == msg.to.end()) continue;
    if (filter.subject_contains && msg.subject.find(*filter.subject_contains) == std::string::npos) continue;
    scan.messages.push_back(std::move(msg));
  }
  std::stable_sort(scan.messages.begin(), scan.messages.end(),
                   [](const RawMessage& a, const RawMessage& b) { return a.received < b.received; });
  return scan;
}

std::string to_string(Band b) {
  switch (b) {
    case Band::S: return "S";
    case Band::X: return "X";
    case Band::I: return "I";
  }
  return "?";
}

std::string to_string(BandNumber n) { return n == BandNumber::Sx20 ? "sx20" : "t20k"; }

std::string to_string(BandKey k) { return to_string(k.band) + "-" + to_string(k.number); }

SourceKind classify_message(const RawMessage& msg) {
  static const std::regex kJplSubject(R"(^\s*DSS-(\d+)\s+([SXIsxi])-(sx20|t20k)\b.*\bpart\s+(\d+)\s+of\s+(\d+)\s*$)",
                                      std::regex::icase);
  static const std::regex kDss(R"(DSS-?(\d+))", std::regex::icase);

  std::smatch m;
  if (std::regex_search(msg.subject, m, kJplSubject)) {
    JplSource src;
    src.dss = std::stoi(m[1]);
    const char band = static_cast<char>(std::toupper(m[2].str()[0]));
    src.band.band = band == 'S' ? Band::S : band == 'X' ? Band::X : Band::I;
    std::string num = m[3];
    std::transform(num.begin(), num.end(), num.begin(), [](unsigned char c) { return std::tolower(c); });
    src.band.number = num == "sx20" ? BandNumber::Sx20 : BandNumber::T20k;
    src.part = std::stoi(m[4]);
    src.total_parts = std::stoi(m[5]);
    if (src.part >= 1 && src.part <= src.total_parts) return src;
  }
  for (const auto& a : msg.attachments) {
    if (ends_with_icase(a.name, ".tar.gz")) {
      CecSource cec;
      if (std::regex_search(msg.subject, m, kDss)) cec.dss = std::stoi(m[1]);
      return cec;
    }
  }
  return UnknownSource{};
}

std::string merge_parts(const std::vector<RawMessage>& parts) {
  if (parts.empty()) throw Error(Errc::PartMissing, "no parts", 1);
  std::optional<JplSource> first;
  std::map<int, const RawMessage*> by_part;
  for (const auto& msg : parts) {
    const auto kind = classify_message(msg);
    const auto* jpl = std::get_if<JplSource>(&kind);
    if (jpl == nullptr) throw Error(Errc::MalformedMessage, fmt::format("{} is not a JPL part", msg.file));
    if (!first) {
      first = *jpl;
    } else if (jpl->band != first->band || jpl->dss != first->dss || jpl->total_parts != first->total_parts) {
      throw Error(Errc::MalformedMessage, fmt::format("{} belongs to a different message", msg.file));
    }
    if (!by_part.emplace(jpl->part, &msg).second) {
      throw Error(Errc::DuplicatePart, fmt::format("part {} appears twice", jpl->part), jpl->part);
    }
  }
  for (int i = 1; i <= first->total_parts; ++i) {
    if (!by_part.contains(i)) {
      throw Error(Errc::PartMissing, fmt::format("part {} of {} missing", i, first->total_parts), i);
    }
  }
  std::string merged;
  for (const auto& [i, msg] : by_part) {
    if (!merged.empty() && merged.back() != '\n') merged.push_back('\n');
    merged += msg->body;
  }
  return merged;
}

}  // namespace tw::ingest
