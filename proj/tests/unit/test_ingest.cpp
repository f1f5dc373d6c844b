#include <doctest.h>

#include <random>
#include <sstream>

#include "../support/fixtures.hpp"
#include "outbreak/ingest.hpp"

using namespace outbreak;

namespace {

SurveillanceParse parse(const std::string& text) {
  std::istringstream in(text);
  return parse_surveillance_csv(in);
}

const char* kHeader = "Year,Week,Country,Province,District,Disease,Number of cases,Number of deaths\n";

std::string square_feature(int id, double x0, const std::string& extra = "") {
  const std::string x1 = std::to_string(x0 + 1);
  const std::string xs = std::to_string(x0);
  return R"({"type":"Feature","properties":{"adm_id":)" + std::to_string(id) +
         R"(,"name":"N","province":"P","country":"C")" + extra +
         R"(},"geometry":{"type":"Polygon","coordinates":[[[)" + xs + ",0],[" + x1 + ",0],[" + x1 +
         ",1],[" + xs + ",1],[" + xs + ",0]]]}}";
}

}  // namespace

TEST_CASE("surveillance row parses into a record") {
  const auto p = parse(std::string(kHeader) + "2019,1,Burundi,Bururi,Matana,Malaria,511,1\n");
  REQUIRE(p.records.size() == 1);
  const auto& r = p.records[0];
  CHECK(r.year == 2019);
  CHECK(r.week == 1);
  CHECK(r.country == "Burundi");
  CHECK(r.province == "Bururi");
  CHECK(r.district == "Matana");
  CHECK(r.disease == "Malaria");
  CHECK(r.cases == 511);
  CHECK(r.deaths == 1);
  CHECK(p.errors.empty());
}

TEST_CASE("header only gives an empty record list") {
  const auto p = parse(kHeader);
  CHECK(p.records.empty());
  CHECK(p.errors.empty());
}

TEST_CASE("header match is case-insensitive and order-free") {
  const auto p = parse("disease,DISTRICT,province,country,week,year,number of deaths,NUMBER OF CASES\n"
                       "Cholera,Matana,Bururi,Burundi,3,2020,0,9\n");
  REQUIRE(p.records.size() == 1);
  CHECK(p.records[0].cases == 9);
  CHECK(p.records[0].year == 2020);
  CHECK(p.records[0].week == 3);
}

TEST_CASE("the 8-row sample gives 8 records") {
  CHECK(parse(fixture::sample_csv()).records.size() == 8);
}

TEST_CASE("missing header column is fatal") {
  CHECK_THROWS_AS(parse("Year,Week,Country,Province,District,Disease,Number of cases\n"), ParseError);
}

TEST_CASE("bad rows are rejected with their line number") {
  const auto p = parse(std::string(kHeader) +
                       "2019,1,B,P,D,X,5,0\n"
                       "2019,1,B,P,E,X,five,0\n"
                       "2019,1,B,P,F,X,-2,0\n"
                       "2019,54,B,P,G,X,1,0\n");
  CHECK(p.records.size() == 1);
  REQUIRE(p.errors.size() == 3);
  CHECK(p.errors[0].line == 3);
  CHECK(p.errors[1].line == 4);
  CHECK(p.errors[2].line == 5);
}

TEST_CASE("duplicate key keeps the last row and warns") {
  const auto p = parse(std::string(kHeader) + "2019,1,B,P,D,X,5,0\n2019,1,B,P,D,X,8,0\n");
  REQUIRE(p.records.size() == 1);
  CHECK(p.records[0].cases == 8);
  CHECK_FALSE(p.warnings.empty());
}

TEST_CASE("deaths above cases is only a warning") {
  const auto p = parse(std::string(kHeader) + "2019,1,B,P,D,X,1,3\n");
  CHECK(p.records.size() == 1);
  CHECK_FALSE(p.warnings.empty());
}

TEST_CASE("surveillance write then parse round-trips") {
  const auto a = parse(fixture::sample_csv());
  std::ostringstream out;
  write_surveillance_csv(a.records, out);
  const auto b = parse(out.str());
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].district == b.records[i].district);
    CHECK(a.records[i].cases == b.records[i].cases);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("four unit squares parse as four regions of area 1") {
  std::string text = R"({"type":"FeatureCollection","features":[)";
  for (int i = 0; i < 4; ++i) text += (i ? "," : "") + square_feature(i + 1, i);
  text += "]}";
  const auto regions = parse_district_geojson_text(text);
  REQUIRE(regions.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(regions[static_cast<std::size_t>(i)].adm_id == i + 1);
    CHECK(area(regions[static_cast<std::size_t>(i)].geometry) == doctest::Approx(1.0));
  }
}

TEST_CASE("unclosed ring is fatal and names the feature") {
  const std::string text =
      R"({"type":"FeatureCollection","features":[)" + square_feature(1, 0) +
      R"(,{"type":"Feature","properties":{"adm_id":2,"name":"N","province":"P","country":"C"},)"
      R"("geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]})";
  try {
    parse_district_geojson_text(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("feature 1") != std::string::npos);
  }
}

TEST_CASE("missing adm_id and non-polygon geometry are fatal") {
  const std::string no_id =
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"name":"N"},)"
      R"("geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]})";
  CHECK_THROWS_AS(parse_district_geojson_text(no_id), ValidationError);
  const std::string line =
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"adm_id":3},)"
      R"("geometry":{"type":"LineString","coordinates":[[0,0],[1,0]]}}]})";
  try {
    parse_district_geojson_text(line);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("feature 0") != std::string::npos);
  }
}

TEST_CASE("multipolygon district keeps both parts") {
  const std::string text =
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"adm_id":7,)"
      R"("name":"Isle","province":"P","country":"C"},"geometry":{"type":"MultiPolygon","coordinates":)"
      R"([[[[0,0],[4,0],[4,4],[0,4],[0,0]]],[[[6,0],[7,0],[7,1],[6,1],[6,0]]]]}}]})";
  const auto regions = parse_district_geojson_text(text);
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].geometry.parts.size() == 2);
  CHECK(area(regions[0].geometry) == doctest::Approx(17.0));
}

// ---------------------------------------------------------------------------

TEST_CASE("2x2 grid reads row-major top to bottom") {
  std::istringstream in("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n3 4\n");
  const auto g = parse_ascii_grid(in);
  CHECK(g.nrows == 2);
  CHECK(g.ncols == 2);
  CHECK(g.values == std::vector<double>{1, 2, 3, 4});
  // The first data row is the northern one.
  CHECK(g.cell_center(0, 0).y == doctest::Approx(1.5));
}

TEST_CASE("nodata sentinel is flagged") {
  std::istringstream in("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -1\n5 -1\n");
  const auto g = parse_ascii_grid(in);
  CHECK_FALSE(g.is_nodata(g.values[0]));
  CHECK(g.is_nodata(g.values[1]));
}

TEST_CASE("grid cell count mismatch and bad tokens are fatal") {
  std::istringstream short_in("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n");
  CHECK_THROWS_AS(parse_ascii_grid(short_in), ParseError);
  std::istringstream bad("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 x\n");
  try {
    parse_ascii_grid(bad);
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row") != std::string::npos);
  }
}

TEST_CASE("random 10x10 grid round-trips bit for bit") {
  Rng rng(99);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  RasterGrid g;
  g.ncols = 10;
  g.nrows = 10;
  g.xll = 29.123456789;
  g.yll = -3.5;
  g.cellsize = 0.008333333333333333;
  for (int i = 0; i < 100; ++i) g.values.push_back(u(rng) / 3.0);
  std::stringstream io;
  write_ascii_grid(g, io);
  const auto back = parse_ascii_grid(io);
  CHECK(back.values == g.values);
  CHECK(back.xll == g.xll);
  CHECK(back.cellsize == g.cellsize);
}

TEST_CASE("point CSV requires finite values") {
  std::istringstream ok("lon,lat,value\n30.1,-3.2,0.5\n");
  CHECK(parse_point_csv(ok).size() == 1);
  std::istringstream bad("lon,lat,value\n30.1,-3.2,nan\n");
  CHECK_THROWS_AS(parse_point_csv(bad), ParseError);
}

// ---------------------------------------------------------------------------

TEST_CASE("filtered 8-row sample gives a 2x2 panel") {
  const auto records = parse(fixture::sample_csv()).records;
  const auto built = build_panel(records, fixture::sample_districts(), make_date(2019, 1, 1), 2, "malaria");
  CHECK(built.panel.counts.size() == 4);
  CHECK(built.panel.at(0, 0, 0) == 511);
  CHECK(built.panel.at(0, 0, 1) == 430);
  CHECK(built.panel.at(0, 1, 0) == 200);
  CHECK(built.panel.at(0, 1, 1) == 0);
}

TEST_CASE("no records gives an all-zero panel of full size") {
  const auto built = build_panel({}, fixture::square_grid(3, 2), make_date(2019, 1, 1), 10, "Cholera");
  CHECK(built.panel.counts.size() == 60);
  CHECK(std::all_of(built.panel.counts.begin(), built.panel.counts.end(), [](auto c) { return c == 0; }));
}

TEST_CASE("unmatched names and out-of-range weeks are dropped and reported") {
  auto records = parse(fixture::sample_csv()).records;
  records.push_back({2019, 1, "Burundi", "Bururi", "Nowhere", "Malaria", 4, 0});
  records.push_back({2019, 30, "Burundi", "Bururi", "Matana", "Malaria", 9, 0});
  const auto built = build_panel(records, fixture::sample_districts(), make_date(2019, 1, 1), 2, "Malaria");
  CHECK(built.dropped_unmatched == 1);
  CHECK(built.dropped_out_of_range == 1);
  REQUIRE(built.unmatched.size() == 1);
  CHECK(built.unmatched[0].find("Nowhere") != std::string::npos);
  CHECK_FALSE(built.warnings.empty());
}

TEST_CASE("district names match after trimming and case folding") {
  std::vector<SurveillanceRecord> records = {{2019, 1, " burundi", "BURURI ", "matana", "Malaria", 3, 0}};
  const auto built = build_panel(records, fixture::sample_districts(), make_date(2019, 1, 1), 1, "Malaria");
  CHECK(built.panel.at(0, 0, 0) == 3);
  CHECK(built.dropped_unmatched == 0);
}

TEST_CASE("ambiguous district names and empty district lists are fatal") {
  auto d = fixture::sample_districts();
  d[1].name = "MATANA";
  CHECK_THROWS_AS(build_panel({}, d, make_date(2019, 1, 1), 1, "Malaria"), ValidationError);
  CHECK_THROWS_AS(build_panel({}, {}, make_date(2019, 1, 1), 1, "Malaria"), ValidationError);
}

TEST_CASE("panel properties on random sparse record sets") {
  Rng rng(7);
  const auto districts = fixture::square_grid(5, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(districts.size()) - 1);
    std::uniform_int_distribution<int> week(1, 53);
    std::uniform_int_distribution<int> year(2018, 2021);
    std::uniform_int_distribution<int> cases(0, 50);
    std::vector<SurveillanceRecord> records;
    const int n = std::uniform_int_distribution<int>(0, 200)(rng);
    for (int i = 0; i < n; ++i) {
      const auto& d = districts[static_cast<std::size_t>(pick(rng))];
      records.push_back({year(rng), week(rng), d.country, d.province, d.name, "X", cases(rng), 0});
    }
    // Deduplicate the way the parser would so sums are comparable.
    std::stringstream csv;
    write_surveillance_csv(records, csv);
    records = parse_surveillance_csv(csv).records;

    const Date start = make_date(2019, 1, 1);
    const int n_weeks = 104;
    const auto built = build_panel(records, districts, start, n_weeks, "X");
    // Completeness.
    CHECK(built.panel.counts.size() == districts.size() * n_weeks);
    // Sum preservation over in-range records.
    std::int64_t expected = 0;
    for (const auto& r : records) {
      const long off = days_between(start, surveillance_week_date(r.year, r.week));
      if (off >= 0 && off < 7L * n_weeks) expected += r.cases;
    }
    std::int64_t total = 0;
    for (auto c : built.panel.counts) total += c;
    CHECK(total == expected);
    // Idempotence through records.
    const auto again = build_panel(panel_to_records(built.panel, districts), districts, start, n_weeks, "X");
    CHECK(again.panel.counts == built.panel.counts);
  }
}
