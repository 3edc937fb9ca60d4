#include <gtest/gtest.h>

#include "amlsim/config.hpp"
#include "amlsim/schema.hpp"

using namespace amlsim;

namespace {

const char* kFigure2 =
    "sender,receiver,quantity,timestamp\n"
    "Exchange 1,Service add 1,1200,17/03/20\n"
    "Service add 1,Service add 2,2000,20/03/20\n";

}  // namespace

TEST(EntitySpec, ParsesLooseSpellings) {
    EXPECT_EQ(parse_entity_spec("Exchange 1"), (EntitySpec{EntityKind::Exchange, 1}));
    EXPECT_EQ(parse_entity_spec("service add 2"), (EntitySpec{EntityKind::ServiceAddress, 2}));
    EXPECT_EQ(parse_entity_spec("Single use 3"), (EntitySpec{EntityKind::SingleUse, 3}));
    EXPECT_EQ(parse_entity_spec("Mixer"), (EntitySpec{EntityKind::Mixer, 1}));
    EXPECT_EQ(parse_entity_spec("DecentralizedExchange 4"), (EntitySpec{EntityKind::DecentralizedExchange, 4}));
}

TEST(EntitySpec, RejectsUnknownKinds) {
    EXPECT_THROW(parse_entity_spec("Bank 1"), ParseError);
    EXPECT_THROW(parse_entity_spec(""), ParseError);
    EXPECT_THROW(parse_entity_spec("Exchange 0"), ParseError);
}

TEST(Schema, FigureTwoRows) {
    const auto rows = parse_schema_text(kFigure2, SchemaFormat::Csv);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].sender, (EntitySpec{EntityKind::Exchange, 1}));
    EXPECT_EQ(rows[0].receiver, (EntitySpec{EntityKind::ServiceAddress, 1}));
    EXPECT_EQ(rows[0].quantity, 1200u);
    EXPECT_EQ(rows[0].latest_ts, make_timestamp(2020, 3, 17));
    EXPECT_EQ(rows[1].quantity, 2000u);
    EXPECT_EQ(rows[1].latest_ts, make_timestamp(2020, 3, 20));
}

TEST(Schema, DateFormatsAgree) {
    EXPECT_EQ(parse_timestamp("17/03/20"), parse_timestamp("2020-03-17"));
    EXPECT_EQ(parse_timestamp("2020-03-17T06:00:00Z"), make_timestamp(2020, 3, 17) + 6 * 3600);
    EXPECT_THROW(parse_timestamp("March 17"), ParseError);
}

TEST(Schema, ErrorsCarryRowNumbers) {
    try {
        parse_schema_text("sender,receiver,quantity,timestamp\nLicit 1,Licit 2,0,2020-01-01\n", SchemaFormat::Csv);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
    EXPECT_THROW(parse_schema_text("sender,receiver\nLicit 1,Licit 2\n", SchemaFormat::Csv), ParseError);
    EXPECT_THROW(parse_schema_text("sender,receiver,quantity,timestamp\n", SchemaFormat::Csv), ParseError);
}

TEST(Schema, PatternColumn) {
    const auto rows = parse_schema_text(
        "sender,receiver,quantity,timestamp,min_inputs,pattern\n"
        "Licit 1,Licit 2,5,2020-01-01,2,3x2\n"
        "Licit 1,Exchange 1,5,2020-01-02,,coinjoin\n"
        "Licit 1,Exchange 1,5,2020-01-03,,inout\n",
        SchemaFormat::Csv);
    EXPECT_EQ(rows[0].style, RowStyle::Pattern);
    EXPECT_EQ(rows[0].pattern->inputs, 3u);
    EXPECT_EQ(rows[0].pattern->outputs, 2u);
    EXPECT_EQ(rows[0].min_inputs, 2u);
    EXPECT_EQ(rows[1].style, RowStyle::Coinjoin);
    EXPECT_EQ(rows[2].style, RowStyle::InOut);
}

TEST(Schema, JsonAndCsvRoundTrip) {
    const auto rows = parse_schema_text(kFigure2, SchemaFormat::Csv);
    const auto json = serialize_schema(rows, SchemaFormat::Json);
    const auto back = parse_schema_text(json, SchemaFormat::Json);
    EXPECT_EQ(serialize_schema(back, SchemaFormat::Csv), serialize_schema(rows, SchemaFormat::Csv));
}

TEST(Schema, ScaleQuantities) {
    const auto rows = scale_quantities(parse_schema_text(kFigure2, SchemaFormat::Csv), 0.001);
    EXPECT_EQ(rows[0].quantity, 1u);
    EXPECT_EQ(rows[1].quantity, 2u);
}

TEST(Validate, FigureTwoIsClean) {
    const auto rep = validate_schema(parse_schema_text(kFigure2, SchemaFormat::Csv));
    EXPECT_TRUE(rep.ok());
}

TEST(Validate, UnfundableSenderIsAnError) {
    const auto rep = validate_schema(parse_schema_text(
        "sender,receiver,quantity,timestamp\nInterimAddress 1,Licit 1,5,2020-01-01\n", SchemaFormat::Csv));
    EXPECT_FALSE(rep.ok());
}

TEST(Validate, OutOfOrderDatesWarnOnly) {
    const auto rep = validate_schema(parse_schema_text(
        "sender,receiver,quantity,timestamp\nLicit 1,Licit 2,5,2020-02-01\nLicit 2,Licit 3,5,2020-01-01\n",
        SchemaFormat::Csv));
    EXPECT_TRUE(rep.ok());
    EXPECT_GE(rep.count(ValidationIssue::Severity::Warning), 1u);
}

TEST(Config, DefaultsAndOverrides) {
    const SimConfig d;
    EXPECT_EQ(d.input_cap, 10u);
    EXPECT_DOUBLE_EQ(d.escrow_fee_rate, 0.01);
    const auto c = config_from_json(nlohmann::json{{"escrow_fee_rate", 0.02}, {"output_cap", 12}});
    EXPECT_DOUBLE_EQ(c.escrow_fee_rate, 0.02);
    EXPECT_EQ(c.output_cap, 12u);
    EXPECT_NE(config_digest(c), config_digest(d));
    EXPECT_THROW(config_from_json(nlohmann::json{{"escrow_fee_rate", 1.5}}), ConfigError);
}
