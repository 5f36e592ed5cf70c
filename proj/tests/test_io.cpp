#include "bsem/io/config.hpp"
#include "bsem/io/csv.hpp"
#include "bsem/io/manifest.hpp"
#include "bsem/core/validate.hpp"
#include "bsem/simulation/presets.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace bsem {
namespace {

io::CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return io::parse_csv(in, "t.csv");
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

TEST(Csv, ParsesHeaderAndRows) {
  const auto t = parse("a,\"b c\",d\r\n1,2.5,-3e-2\n\n4,+5,6\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b c", "d"}));
  ASSERT_EQ(t.values.rows(), 2);
  EXPECT_EQ(t.values(0, 2), -0.03);
  EXPECT_EQ(t.values(1, 1), 5.0);
  EXPECT_EQ(t.lines, (std::vector<std::size_t>{2, 4}));
}

TEST(Csv, ErrorsNameTheRow) {
  EXPECT_NE(error_of([] { (void)parse("a,b\n1,2\n3\n"); }).find("line 3 (data row 2): expected 2 fields, found 1"), std::string::npos);
  EXPECT_NE(error_of([] { (void)parse("a,b\n1,2\n3,x\n"); }).find("data row 2), column 'b': 'x' is not a finite number"),
            std::string::npos);
  EXPECT_NE(error_of([] { (void)parse("a,b\n1,\n"); }).find("missing value"), std::string::npos);
  EXPECT_NE(error_of([] { (void)parse("a,b\n1,nan\n"); }).find("not a finite number"), std::string::npos);
  EXPECT_NE(error_of([] { (void)parse("a,b\n1,1,5\n"); }).find("data row 1"), std::string::npos);
  EXPECT_NE(error_of([] { (void)parse("a,b\n"); }).find("no data rows"), std::string::npos);
  EXPECT_NE(error_of([] { (void)parse(""); }).find("no header"), std::string::npos);
  EXPECT_NE(error_of([] { (void)parse("a,\"b\n1,2\n"); }).find("unterminated quote"), std::string::npos);
}

TEST(Csv, BindsItemsByNameAndChecksCodes) {
  const auto t = parse("z,y2,y1\n9,1,0\n9,0,1\n");
  const auto items = presets::items(2, ItemKind::binary);
  const auto d = io::bind_items(t, items);
  EXPECT_EQ(d.values(0, 0), 0.0);
  EXPECT_EQ(d.values(0, 1), 1.0);
  const auto bad = parse("y1,y2\n0,1\n\n2,0\n");
  EXPECT_NE(error_of([&] { (void)io::bind_items(bad, items); }).find("data row 2 (line 4), column 'y1': value 2"), std::string::npos);
  EXPECT_NE(error_of([&] { (void)io::bind_items(parse("y1,y2\n0.5,1\n"), items); }).find("not a category code"), std::string::npos);
  EXPECT_NE(error_of([&] { (void)io::bind_items(parse("y1\n0\n"), items); }).find("no column named 'y2'"), std::string::npos);
  std::vector<ItemSpec> ord{{"q", ItemKind::ordinal, 4}};
  EXPECT_NO_THROW((void)io::bind_items(parse("q\n0\n3\n"), ord));
  EXPECT_THROW((void)io::bind_items(parse("q\n4\n"), ord), InputError);
}

TEST(Csv, WriteReadRoundTripIsExact) {
  Matrix M(3, 2);
  M << 0.1, -1.0 / 3.0, 1e-300, 12345.678901234567, -0.0, 2.0;
  std::ostringstream os;
  io::write_csv(os, {"a", "b"}, M);
  const auto t = parse(os.str());
  EXPECT_EQ(t.values, M);
}

TEST(Config, PresetsRoundTrip) {
  std::vector<ModelSpec> models;
  for (auto kind : {ItemKind::continuous, ItemKind::binary}) {
    for (const auto& m : presets::bundle(kind)) models.push_back(m);
  }
  for (const auto& f : presets::ftnd_roster()) models.push_back(presets::ftnd_model(f));
  for (const auto& m : models) {
    const auto back = io::model_from_json(io::model_to_json(m));
    EXPECT_EQ(io::model_to_json(back), io::model_to_json(m)) << m.name;
    EXPECT_EQ(back.variant, m.variant);
    EXPECT_EQ(back.pattern.has_value(), m.pattern.has_value());
    if (m.pattern) {
      EXPECT_EQ(back.pattern->entries, m.pattern->entries) << m.name;
      EXPECT_EQ(back.pattern->leading, m.pattern->leading) << m.name;
    }
    EXPECT_NO_THROW((void)validate_spec(back)) << m.name;
  }
}

TEST(Config, ZeroEntriesFollowTheVariant) {
  const auto j = io::json::parse(R"({"variant": "AZ", "factors": 2, "items": ["a", "b", "c", "d"],
    "pattern": [["free", "zero"], ["free", "zero"], ["zero", "free"], ["zero", 0]]})");
  const auto m = io::model_from_json(j);
  EXPECT_EQ(m.link, Link::identity);
  EXPECT_EQ(m.pattern->at(2, 0).kind, LoadingKind::approx_zero);
  EXPECT_EQ(m.pattern->at(3, 1).kind, LoadingKind::fixed);
  EXPECT_EQ(m.pattern->leading, (std::vector<int>{0, 2}));
  auto jz = j;
  jz["variant"] = "EZ";
  EXPECT_EQ(io::model_from_json(jz).pattern->at(2, 0), LoadingEntry::fixed_at(0.0));
}

TEST(Config, ItemsAndPriors) {
  const auto j = io::json::parse(R"({"name": "m", "variant": "EFA-C", "factors": 1, "item_kind": "binary", "link": "probit",
    "items": ["a", {"name": "b", "kind": "ordinal", "categories": 3}],
    "priors": {"lkj_eta": 3, "psi_prior": {"kind": "inv_gamma", "shape": 0.1, "scale": 0.2}, "omega_df": 9}})");
  const auto m = io::model_from_json(j);
  EXPECT_EQ(m.items[0].kind, ItemKind::binary);
  EXPECT_EQ(m.items[1].categories, 3);
  EXPECT_EQ(m.link, Link::probit);
  EXPECT_EQ(m.priors.lkj_eta, 3.0);
  EXPECT_EQ(m.priors.psi_prior.kind, PsiPriorKind::inv_gamma);
  EXPECT_EQ(m.priors.psi_prior.b, 0.2);
  EXPECT_EQ(m.priors.omega_df, 9.0);
}

TEST(Config, ErrorsNameTheField) {
  auto err = [](const char* text) { return error_of([&] { (void)io::model_from_json(io::json::parse(text), "m.json"); }); };
  EXPECT_EQ(err(R"({"variant": "EZ", "factors": 1, "items": ["a"], "pattern": [["free"]], "colour": 1})"), "m.json.colour: unknown key");
  EXPECT_EQ(err(R"({"variant": "XX", "factors": 1, "items": ["a"]})"), "m.json.variant: 'XX' is not one of EZ, AZ, EFA, EFA-C");
  EXPECT_EQ(err(R"({"variant": "EZ", "items": ["a"]})"), "m.json: missing required key 'factors'");
  EXPECT_EQ(err(R"({"variant": "EZ", "factors": "2", "items": ["a"]})"), "m.json.factors: expected an integer");
  EXPECT_EQ(err(R"({"variant": "EZ", "factors": 1, "items": ["a"], "pattern": [["maybe"]]})"),
            "m.json.pattern[0][0]: expected \"free\", \"zero\", \"approx_zero\" or a number");
  EXPECT_EQ(err(R"({"variant": "EZ", "factors": 1, "items": ["a", "a"]})"), "m.json.items: duplicate item name 'a'");
  EXPECT_EQ(err(R"({"variant": "EZ", "factors": 1, "items": ["a"], "priors": {"psi_prior": {"kind": "uniform"}}})"),
            "m.json.priors.psi_prior: missing required key 'upper'");
  EXPECT_EQ(err(R"({"variant": "EZ", "factors": 1, "items": [{"name": "a", "kind": "count"}]})"),
            "m.json.items[0].kind: 'count' is not one of continuous, binary, ordinal");
  std::istringstream in("{\"variant\": \"EZ\",\n \"factors\" 1}");
  EXPECT_NE(error_of([&] { (void)io::parse_json_text(in, "m.json"); }).find("line 2"), std::string::npos);
}

TEST(Manifest, Fnv1aReferenceValues) {
  // published FNV-1a 64-bit test vectors
  EXPECT_EQ(io::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

}  // namespace
}  // namespace bsem
