#include <gtest/gtest.h>

#include "floodmob/csv.hpp"
#include "floodmob/geojson.hpp"
#include "floodmob/ingest.hpp"
#include "test_util.hpp"

using namespace floodmob;
using testutil::TempDir;
using testutil::write_text;

namespace {

const char* kDemoHeader =
    "cbg_id,county_id,state,median_income,pop_total,pop_white,pop_black,pop_asian,pop_25plus,"
    "pop_25plus_low_attainment\n";

std::string rect_feature(const std::string& props, double x0, double y0, double x1, double y1) {
  auto s = [](double v) { return format_shortest(v); };
  return R"({"type":"Feature","properties":)" + props + R"(,"geometry":{"type":"Polygon","coordinates":[[[)" +
         s(x0) + "," + s(y0) + "],[" + s(x1) + "," + s(y0) + "],[" + s(x1) + "," + s(y1) + "],[" + s(x0) + "," +
         s(y1) + "],[" + s(x0) + "," + s(y0) + "]]]}}";
}

std::string collection(const std::vector<std::string>& features) {
  std::string s = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < features.size(); ++i) s += (i ? "," : "") + features[i];
  return s + "]}";
}

// Two CBGs side by side in county 001 and one in county 002.
struct Fixture {
  TempDir dir{"ingest"};
  std::filesystem::path geo = dir / "cbg.geojson";
  std::filesystem::path demo = dir / "demo.csv";

  Fixture() {
    write_text(geo, collection({rect_feature(R"({"cbg_id":"A"})", 0, 0, 1, 1),
                                rect_feature(R"({"cbg_id":"B"})", 1, 0, 2, 1),
                                rect_feature(R"({"cbg_id":"C"})", 0, 1, 1, 2)}));
    write_text(demo, std::string(kDemoHeader) +
                         "A,001,TX,50000,100,50,30,10,60,20\n"
                         "B,001,TX,,200,100,50,20,120,30\n"
                         "C,002,TX,70000,300,100,100,50,200,40\n");
  }
};

}  // namespace

TEST(Csv, SplitHandlesQuotesAndWhitespace) {
  EXPECT_EQ(csv::split_line(R"(a, "b,c" ,"d""e",)"), (std::vector<std::string>{"a", "b,c", "d\"e", ""}));
}

TEST(Csv, ReadSkipsBomAndBlankLines) {
  TempDir d;
  write_text(d / "x.csv", "\xEF\xBB\xBFh1,h2\r\n\n1,2\r\n  \n3,4\n");
  const auto t = csv::read_file(d / "x.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"h1", "h2"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].line, 3u);
  EXPECT_EQ(t.rows[1].fields, (std::vector<std::string>{"3", "4"}));
}

TEST(Csv, NumberParsing) {
  std::int64_t i = 0;
  double d = 0;
  EXPECT_TRUE(csv::parse_int(" 42 ", i));
  EXPECT_EQ(i, 42);
  EXPECT_FALSE(csv::parse_int("4.2", i));
  EXPECT_FALSE(csv::parse_int("", i));
  EXPECT_TRUE(csv::parse_double("-1.5e3", d));
  EXPECT_EQ(d, -1500);
  EXPECT_FALSE(csv::parse_double("nan", d));
  EXPECT_FALSE(csv::parse_double("1.0x", d));
}

TEST(Csv, MissingFileNamesPath) {
  try {
    csv::read_file("/nonexistent/stays.csv");
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/stays.csv"), std::string::npos);
  }
}

TEST(GeoJson, PolygonAndMultiPolygon) {
  TempDir d;
  write_text(d / "f.geojson",
             collection({rect_feature(R"({"zone":"AE"})", 0, 0, 1, 1),
                         R"({"type":"Feature","properties":{"zone":"VE"},"geometry":{"type":"MultiPolygon",
                         "coordinates":[[[[2,2],[3,2],[3,3],[2,2]]],[[[5,5],[6,5],[6,6],[5,5]]]]}})"}));
  const auto fs = geojson::read_polygon_features(d / "f.geojson");
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(fs[0].parts.size(), 1u);
  EXPECT_EQ(fs[1].parts.size(), 2u);
  EXPECT_EQ(fs[1].string_property("zone"), "VE");
}

TEST(GeoJson, InvalidRingIsPerFeatureError) {
  TempDir d;
  write_text(d / "f.geojson",
             collection({R"({"type":"Feature","properties":{},"geometry":{"type":"Polygon",
                         "coordinates":[[[0,0],[1,0],[1,1]]]}})",
                         rect_feature("{}", 0, 0, 1, 1)}));
  const auto fs = geojson::read_polygon_features(d / "f.geojson");
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_FALSE(fs[0].valid());
  EXPECT_NE(fs[0].error.find("feature 0"), std::string::npos);
  EXPECT_TRUE(fs[1].valid());
}

TEST(GeoJson, StructuralErrorsAreFatal) {
  TempDir d;
  write_text(d / "a.geojson", "{not json");
  EXPECT_THROW(geojson::read_polygon_features(d / "a.geojson"), IngestError);
  write_text(d / "b.geojson", R"({"type":"Feature"})");
  EXPECT_THROW(geojson::read_polygon_features(d / "b.geojson"), IngestError);
  write_text(d / "c.geojson", collection({R"({"type":"Feature","geometry":{"type":"Point","coordinates":[0,0]}})"}));
  try {
    geojson::read_polygon_features(d / "c.geojson");
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("feature 0"), std::string::npos);
  }
}

TEST(GeoJson, WriterRoundTripsCoordinatesExactly) {
  TempDir d;
  const auto g = geo::PolygonGeom::rectangle(-94.123456789, 29.1, -94.0000001, 29.987654321);
  geojson::write_feature_collection(d / "w.geojson", {geojson::feature_line({g}, R"({"k":1})")});
  const auto fs = geojson::read_polygon_features(d / "w.geojson");
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].parts[0], g);
  EXPECT_EQ(fs[0].string_property("k"), "1");
}

TEST(Floodplain, ZoneFilter) {
  TempDir d;
  write_text(d / "f.geojson", collection({rect_feature(R"({"zone":"AE"})", 0, 0, 1, 1),
                                          rect_feature(R"({"zone":"X"})", 2, 2, 3, 3),
                                          rect_feature(R"({})", 4, 4, 5, 5)}));
  const auto all = ingest::load_floodplain(d / "f.geojson");
  EXPECT_EQ(all.map.size(), 3u);
  const auto filtered = ingest::load_floodplain(d / "f.geojson", ingest::ZoneFilter::parse("A, AE ,VE"));
  EXPECT_EQ(filtered.map.size(), 1u);
  EXPECT_EQ(filtered.filtered_out, 2u);
  EXPECT_TRUE(filtered.map.contains({0.5, 0.5}));
  EXPECT_FALSE(filtered.map.contains({2.5, 2.5}));
  EXPECT_FALSE(ingest::ZoneFilter::parse("  ").has_value());
}

TEST(Cbgs, JoinGeometryAndDemographics) {
  Fixture f;
  const auto load = ingest::load_cbgs(f.geo, f.demo);
  ASSERT_EQ(load.cbgs.size(), 3u);
  EXPECT_EQ(load.cbgs[0].cbg_id, "A");
  EXPECT_EQ(load.cbgs[0].median_income, 50000.0);
  EXPECT_FALSE(load.cbgs[1].median_income.has_value());  // blank income
  EXPECT_EQ(load.cbgs[2].county_id, "002");
  EXPECT_EQ(load.cbgs[2].pop_25plus_low_attainment, 40);
}

TEST(Cbgs, UnmatchedRecordsAreDroppedAndCounted) {
  Fixture f;
  write_text(f.demo, std::string(kDemoHeader) + "A,001,TX,50000,100,50,30,10,60,20\nQ,001,TX,1,1,1,0,0,1,0\n");
  const auto load = ingest::load_cbgs(f.geo, f.demo);
  EXPECT_EQ(load.cbgs.size(), 1u);
  EXPECT_EQ(load.missing_geometry, 1u);
  EXPECT_EQ(load.missing_demographics, 2u);
  EXPECT_EQ(load.dropped_ids, (std::vector<std::string>{"B", "C", "Q"}));
}

TEST(Cbgs, BadRowsRejected) {
  Fixture f;
  write_text(f.demo, std::string(kDemoHeader) +
                         "A,001,TX,50000,100,150,30,10,60,20\n"  // white > total
                         "B,001,TX,abc,200,100,50,20,120,30\n"   // income not numeric
                         "C,002,TX,70000,300,100,100,50,20,40\n"  // low attainment > 25plus
  );
  const auto load = ingest::load_cbgs(f.geo, f.demo);
  EXPECT_TRUE(load.cbgs.empty());
  EXPECT_EQ(load.demographics_report.rejected, 3u);
  EXPECT_NE(load.demographics_report.messages[0].find("demo.csv:2"), std::string::npos);
}

TEST(Cbgs, NegativeCountRejected) {
  Fixture f;
  write_text(f.demo, std::string(kDemoHeader) + "A,001,TX,50000,-1,0,0,0,0,0\n");
  EXPECT_EQ(ingest::load_cbgs(f.geo, f.demo).demographics_report.rejected, 1u);
}

TEST(Cbgs, DuplicateIdIsFatal) {
  Fixture f;
  write_text(f.demo, std::string(kDemoHeader) + "A,001,TX,1,1,1,0,0,1,0\nA,001,TX,1,1,1,0,0,1,0\n");
  EXPECT_THROW(ingest::load_cbgs(f.geo, f.demo), IngestError);
}

TEST(Cbgs, WrongHeaderIsFatal) {
  Fixture f;
  write_text(f.demo, "cbg_id,county\nA,1\n");
  try {
    ingest::load_cbgs(f.geo, f.demo);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("demo.csv:1"), std::string::npos);
  }
}

TEST(Stays, DeriveCbgAndRejectBadRows) {
  Fixture f;
  const auto cbgs = ingest::load_cbgs(f.geo, f.demo).cbgs;
  geo::CbgIndex idx(cbgs);
  const StudyWindow w;
  const auto s0 = std::to_string(w.start());
  write_text(f.dir / "stays.csv",
             "device_id,lon,lat,start_epoch_min,dwell_min\n"
             "d1,0.5,0.5," + s0 + ",30\n"                              // in A
             "d1,1.5,0.5," + s0 + ",30\n"                              // in B
             "d1,9,9," + s0 + ",30\n"                                  // no CBG
             "d1,0.5,0.5," + std::to_string(w.end()) + ",30\n"         // out of window
             "d1,0.5,0.5," + s0 + ",0\n"                               // dwell 0
             "d1,200,0.5," + s0 + ",30\n"                              // bad lon
             "d1,0.5,0.5\n");                                          // short row
  const auto load = ingest::load_stays(f.dir / "stays.csv", w, idx);
  EXPECT_EQ(load.rows, 7u);
  ASSERT_EQ(load.stays.size(), 3u);
  EXPECT_EQ(load.stays[0].stay_cbg, "A");
  EXPECT_EQ(load.stays[1].stay_cbg, "B");
  EXPECT_FALSE(load.stays[2].stay_cbg.has_value());
  EXPECT_EQ(load.unlocated, 1u);
  EXPECT_EQ(load.out_of_window, 1u);
  EXPECT_EQ(load.bad_dwell, 1u);
  EXPECT_EQ(load.bad_coordinate, 1u);
  EXPECT_EQ(load.malformed, 1u);
  EXPECT_EQ(load.report.rejected, 4u);
  EXPECT_EQ(load.report.accepted + load.report.rejected, load.rows);
}

TEST(Stays, ExplicitCbgColumn) {
  Fixture f;
  const auto cbgs = ingest::load_cbgs(f.geo, f.demo).cbgs;
  geo::CbgIndex idx(cbgs);
  const StudyWindow w;
  const auto s0 = std::to_string(w.start());
  write_text(f.dir / "stays.csv",
             "device_id,lon,lat,start_epoch_min,dwell_min,stay_cbg\n"
             "d1,0.5,0.5," + s0 + ",30,C\n"  // explicit value wins
             "d1,0.5,0.5," + s0 + ",30,\n"   // empty: derived
             "d1,0.5,0.5," + s0 + ",30,NOPE\n");
  const auto load = ingest::load_stays(f.dir / "stays.csv", w, idx, 3);
  EXPECT_TRUE(load.had_cbg_column);
  ASSERT_EQ(load.stays.size(), 2u);
  EXPECT_EQ(load.stays[0].stay_cbg, "C");
  EXPECT_EQ(load.stays[1].stay_cbg, "A");
  EXPECT_EQ(load.unknown_cbg, 1u);
}

TEST(Stays, WrongHeaderIsFatal) {
  Fixture f;
  const auto cbgs = ingest::load_cbgs(f.geo, f.demo).cbgs;
  geo::CbgIndex idx(cbgs);
  write_text(f.dir / "stays.csv", "device,lon,lat\n");
  EXPECT_THROW(ingest::load_stays(f.dir / "stays.csv", StudyWindow{}, idx), IngestError);
}

TEST(Homes, DuplicatesUnknownAndConflicts) {
  Fixture f;
  const auto cbgs = ingest::load_cbgs(f.geo, f.demo).cbgs;
  geo::CbgIndex idx(cbgs);
  write_text(f.dir / "homes.csv", "device_id,home_cbg\nd2,B\nd1,A\nd1,A\nd3,ZZZ\n");
  const auto load = ingest::load_homes(f.dir / "homes.csv", idx);
  ASSERT_EQ(load.homes.size(), 2u);
  EXPECT_EQ(load.homes[0].device_id, "d1");
  EXPECT_EQ(load.duplicates, 1u);
  EXPECT_EQ(load.dropped_unknown, 1u);

  write_text(f.dir / "homes.csv", "device_id,home_cbg\nd1,A\nd1,B\n");
  EXPECT_THROW(ingest::load_homes(f.dir / "homes.csv", idx), IngestError);
}
