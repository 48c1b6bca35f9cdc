#include <gtest/gtest.h>

#include <atomic>
#include <sstream>
#include <thread>

#include "test_support.hpp"
#include "veritrace/evidence.hpp"

using namespace veritrace;
using namespace std::chrono_literals;

namespace {

EvidenceRecord record(std::string id, Engine e, std::vector<std::string> titles) {
  EvidenceRecord r;
  r.image_id = std::move(id);
  r.engine = e;
  r.titles = std::move(titles);
  r.retrieved_at = parse_iso8601("2015-01-01T00:00:00Z");
  return r;
}

EvidenceStore shark_store() {
  return load_store(testutil::fixture("shark/evidence.jsonl"));
}

}  // namespace

TEST(Timestamps, RoundTripAndOffsets) {
  const Timestamp t = parse_iso8601("2015-10-26T12:34:56Z");
  EXPECT_EQ(format_iso8601(t), "2015-10-26T12:34:56Z");
  EXPECT_EQ(parse_iso8601("2015-10-26T14:34:56+02:00"), t);
  EXPECT_EQ(parse_iso8601("2015-10-26T12:34:56.789Z"), t);
  EXPECT_THROW(parse_iso8601("yesterday"), InputError);
  EXPECT_THROW(parse_iso8601("2015-13-01T00:00:00Z"), InputError);
}

TEST(EvidenceJsonl, RecordRoundTrip) {
  const auto r = record("img\"1", Engine::google_images, {"a \"quoted\" title", "caf\xc3\xa9"});
  EXPECT_EQ(record_from_jsonl(to_jsonl(r)), r);
}

TEST(EvidenceJsonl, RejectsInvalidRecords) {
  EXPECT_THROW(record_from_jsonl("{broken"), InputError);
  EXPECT_THROW(record_from_jsonl(R"({"image_id":"a","engine":"yahoo","titles":[],"retrieved_at":"2015-01-01T00:00:00Z"})"),
               InputError);
  EXPECT_THROW(record_from_jsonl(R"({"image_id":"a","engine":"fixture","titles":[""],"retrieved_at":"2015-01-01T00:00:00Z"})"),
               InputError);
  EXPECT_THROW(record_from_jsonl(R"({"image_id":"a","engine":"fixture","titles":["1","2","3","4","5","6","7","8","9","10","11"],"retrieved_at":"2015-01-01T00:00:00Z"})"),
               InputError);
  EXPECT_THROW(record_from_jsonl(R"({"image_id":"a","engine":"fixture","titles":[],"retrieved_at":"soon"})"),
               InputError);
}

TEST(EvidenceStore, UpsertKeepsOneRecordPerKey) {
  EvidenceStore store;
  store.upsert(record("a", Engine::bing_visual, {"first"}));
  store.upsert(record("a", Engine::google_images, {"other engine"}));
  store.upsert(record("a", Engine::bing_visual, {"second"}));
  EXPECT_EQ(store.size(), 2u);
  EXPECT_EQ(store.find("a", Engine::bing_visual)->titles, std::vector<std::string>{"second"});
  EXPECT_FALSE(store.find("b", Engine::bing_visual).has_value());
}

TEST(EvidenceStore, SaveLoadRoundTrip) {
  testutil::TempDir dir;
  EvidenceStore store;
  store.upsert(record("z", Engine::fixture, {}));
  store.upsert(record("a", Engine::bing_visual, {"one", "two"}));
  store.save(dir / "store.jsonl");
  const EvidenceStore back = load_store(dir / "store.jsonl");
  EXPECT_EQ(back.records(), store.records());
  EXPECT_EQ(back.records().front().image_id, "a");
}

TEST(EvidenceStore, MissingFileIsMissingArtifact) {
  EXPECT_THROW(load_store("/nonexistent/evidence.jsonl"), MissingArtifactError);
}

TEST(EvidenceStore, ConcurrentReadersSeeConsistentRecords) {
  EvidenceStore store;
  for (int i = 0; i < 50; ++i) store.upsert(record("img" + std::to_string(i), Engine::fixture, {"t"}));
  std::atomic<int> found{0};
  std::vector<std::jthread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      for (int i = 0; i < 50; ++i)
        if (store.find("img" + std::to_string(i), Engine::fixture)) ++found;
    });
  }
  std::jthread writer([&] {
    for (int i = 50; i < 100; ++i) store.upsert(record("img" + std::to_string(i), Engine::fixture, {"t"}));
  });
  readers.clear();
  writer.join();
  EXPECT_EQ(found.load(), 200);
  EXPECT_EQ(store.size(), 100u);
}

TEST(Import, MalformedLinesAreReportedLastWins) {
  EvidenceStore store;
  std::istringstream in(
      to_jsonl(record("a", Engine::fixture, {"old"})) + "\n" + "garbage\n" +
      to_jsonl(record("a", Engine::fixture, {"new"})) + "\n\n");
  const auto r = import_records(store, in);
  EXPECT_EQ(r.accepted, 2u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].line, 2u);
  EXPECT_EQ(store.find("a", Engine::fixture)->titles, std::vector<std::string>{"new"});
}

TEST(GetTitles, SharkImageTopTwo) {
  const auto store = shark_store();
  const auto titles = get_titles(store, "sandy_shark_1", Engine::bing_visual, 2);
  ASSERT_EQ(titles.size(), 2u);
  EXPECT_EQ(titles[0], "Is that picture real or fake? - Is that right?");
  EXPECT_EQ(titles[1], "20 Epic Fake Pictures that Have Foiled the Whole World Shark swimming.");
}

TEST(GetTitles, ReturnsMinOfKAndAvailable) {
  const auto store = shark_store();
  EXPECT_EQ(get_titles(store, "sandy_shark_1", Engine::bing_visual, 10).size(), 5u);
  EXPECT_TRUE(get_titles(store, "unknown", Engine::bing_visual, 5).empty());
  EXPECT_THROW(get_titles(store, "sandy_shark_1", Engine::bing_visual, 0), std::invalid_argument);
  EXPECT_THROW(get_titles(store, "sandy_shark_1", Engine::bing_visual, 11), std::invalid_argument);
}

TEST(GetTitles, PrefixPropertyAcrossK) {
  const auto store = shark_store();
  for (const auto& rec : store.records()) {
    for (std::size_t k = 1; k <= kMaxTitles; ++k) {
      const auto titles = get_titles(store, rec.image_id, rec.engine, k);
      EXPECT_EQ(titles.size(), std::min(k, rec.titles.size()));
      for (std::size_t i = 0; i < titles.size(); ++i) EXPECT_EQ(titles[i], rec.titles[i]);
    }
  }
}

TEST(Normalize, DecodesEntitiesAndCollapsesWhitespace) {
  EXPECT_EQ(decode_html_entities("Tom &amp; Jerry &lt;3 &#39;hi&#x27; &bogus;caf&#233; & done"),
            "Tom & Jerry <3 'hi' caf\xc3\xa9 & done");
  const std::vector<std::string> raw{"  Shark\t\n in   street  ", "ok", "SHARK IN STREET", "A &amp; B"};
  EXPECT_EQ(normalize_titles(raw), (std::vector<std::string>{"Shark in street", "A & B"}));
}

TEST(Normalize, KeepsAtMostTen) {
  std::vector<std::string> raw;
  for (int i = 0; i < 15; ++i) raw.push_back("title number " + std::to_string(i));
  const auto out = normalize_titles(raw);
  ASSERT_EQ(out.size(), 10u);
  EXPECT_EQ(out.front(), "title number 0");
  EXPECT_EQ(out.back(), "title number 9");
}
