#include "tw/ingest/pipeline.hpp"

#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tw/error.hpp"
#include "tw/track/canonical_csv.hpp"

namespace tw::ingest {
namespace fs = std::filesystem;

std::string jpl_output_name(BandKey band) {
  return fmt::format("jpl_{}_{}.csv", to_string(band.band), to_string(band.number));
}

std::string cec_output_name(int dss) { return fmt::format("cec_dss{}.csv", dss); }

IngestSummary run_ingest(const fs::path& mailbox, const fs::path& out_dir, const MailboxFilter& filter,
                         const CecSelection& selection) {
  MailboxScan scan = scan_mailbox(mailbox, filter);
  IngestSummary summary;
  summary.messages = scan.messages.size();
  summary.skipped = scan.skipped;

  using JplGroupKey = std::tuple<BandKey, int, int, std::string>;
  std::map<JplGroupKey, std::vector<RawMessage>> jpl_groups;
  std::vector<std::pair<const RawMessage*, CecSource>> cec_messages;
  for (const auto& msg : scan.messages) {
    const SourceKind kind = classify_message(msg);
    if (const auto* jpl = std::get_if<JplSource>(&kind)) {
      jpl_groups[{jpl->band, jpl->dss, jpl->total_parts, format_date(msg.received)}].push_back(msg);
    } else if (const auto* cec = std::get_if<CecSource>(&kind)) {
      cec_messages.emplace_back(&msg, *cec);
    } else {
      ++summary.unknown_messages;
    }
  }

  std::map<BandKey, std::vector<TransmitterRecord>> by_band;
  for (const auto& [key, parts] : jpl_groups) {
    const auto& [band, dss, total, day] = key;
    const std::string label = fmt::format("jpl {} DSS-{} {}", to_string(band), dss, day);
    try {
      ParsedTransmitter parsed = parse_jpl_body(merge_parts(parts), band);
      auto& sink = by_band[band];
      sink.insert(sink.end(), parsed.records.begin(), parsed.records.end());
      summary.reports.emplace(label, std::move(parsed.report));
    } catch (const Error& e) {
      spdlog::warn("{}: {}", label, e.what());
      summary.skipped.push_back(fmt::format("{}: {}", label, e.what()));
    }
  }

  std::map<int, std::vector<TransmitterRecord>> by_station;
  for (const auto& [msg, cec] : cec_messages) {
    for (const auto& att : msg->attachments) {
      if (!att.name.ends_with(".tar.gz")) continue;
      const std::string label = fmt::format("cec {}", att.name);
      try {
        CecSelection sel = selection;
        if (!sel.dss) sel.dss = cec.dss;
        const ArchiveMember member = extract_cec_archive(att.bytes);
        ParsedTransmitter parsed = parse_cec_csv(member.text, sel);
        for (auto& r : parsed.records) by_station[r.dss].push_back(std::move(r));
        summary.reports.emplace(label, std::move(parsed.report));
      } catch (const Error& e) {
        spdlog::warn("{}: {}", label, e.what());
        summary.skipped.push_back(fmt::format("{}: {}", label, e.what()));
      }
    }
  }

  fs::create_directories(out_dir);
  auto emit = [&](const std::string& name, const std::vector<TransmitterRecord>& recs, Provenance prov) {
    const auto records = to_records(recs);
    const FrameMap frames = build_track_frames(records, prov);
    const fs::path path = out_dir / name;
    write_text_file(path, write_canonical_csv(frames));
    summary.outputs.push_back(IngestOutput{path, records.size()});
  };
  for (const auto& [band, recs] : by_band) emit(jpl_output_name(band), recs, Provenance::JplTransmitter);
  for (const auto& [dss, recs] : by_station) emit(cec_output_name(dss), recs, Provenance::CecTransmitter);
  std::sort(summary.outputs.begin(), summary.outputs.end(),
            [](const IngestOutput& a, const IngestOutput& b) { return a.path < b.path; });
  return summary;
}

}  // namespace tw::ingest
