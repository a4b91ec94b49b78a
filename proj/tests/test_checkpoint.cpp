#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "dugks/checkpoint.hpp"
#include "dugks/error.hpp"
#include "dugks/scheme.hpp"
#include "oracles.hpp"

using namespace dugks;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "dugks_checkpoint_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<char> slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<char>& bytes)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

CheckpointError::Kind kind_of(const fs::path& p)
{
    try {
        checkpoint_read(p);
    } catch (const CheckpointError& e) {
        return e.kind();
    }
    FAIL("checkpoint_read accepted a damaged file");
    return CheckpointError::Kind::BadMagic;
}

}  // namespace

TEST_SUITE("checkpoint")
{
    TEST_CASE("round trip is bitwise for both velocity sets")
    {
        for (const auto& set : {build_d2q9(0.5), build_d1q3(0.5)}) {
            DistributionField f(UniformPeriodicGrid(set.dim, 7), set);
            std::mt19937_64 rng(42);
            oracle::randomize(f, rng, 0.4);
            f.set_time(12.375);
            f.set_step_count(991);
            const RelaxationModel model(2.5e-5, 1.5);
            const auto path = scratch(std::string("round_") + std::string(set.name()) + ".ckp");
            checkpoint_write(f, model, path);
            CHECK_FALSE(fs::exists(path.string() + ".tmp"));
            const auto back = checkpoint_read(path);
            CHECK(back.field.grid().n() == 7);
            CHECK(back.field.set().kind == set.kind);
            CHECK(back.field.time() == 12.375);
            CHECK(back.field.step_count() == 991);
            CHECK(back.model.epsilon() == 2.5e-5);
            CHECK(back.model.tau() == 1.5);
            CHECK(std::equal(f.values().begin(), f.values().end(), back.field.values().begin()));
        }
    }

    TEST_CASE("damaged files are classified")
    {
        const auto set = build_d2q9(0.5);
        DistributionField f(UniformPeriodicGrid(2, 4), set);
        std::mt19937_64 rng(1);
        oracle::randomize(f, rng, 0.1);
        const auto good = scratch("good.ckp");
        checkpoint_write(f, RelaxationModel(1e-3), good);
        const auto bytes = slurp(good);
        const auto bad = scratch("bad.ckp");

        auto magic = bytes;
        magic[0] = 'X';
        spit(bad, magic);
        CHECK(kind_of(bad) == CheckpointError::Kind::BadMagic);

        auto version = bytes;
        version[8] = static_cast<char>(kCheckpointVersion + 1);
        spit(bad, version);
        CHECK(kind_of(bad) == CheckpointError::Kind::VersionMismatch);

        auto extent = bytes;
        extent[12] = 5;  // n = 5 no longer matches the stored value count
        spit(bad, extent);
        CHECK(kind_of(bad) == CheckpointError::Kind::ExtentMismatch);

        auto dims = bytes;
        dims[9] = 1;
        spit(bad, dims);
        CHECK(kind_of(bad) == CheckpointError::Kind::ExtentMismatch);

        auto shortened = bytes;
        shortened.resize(bytes.size() - 8);
        spit(bad, shortened);
        CHECK(kind_of(bad) == CheckpointError::Kind::Truncated);

        auto header_only = bytes;
        header_only.resize(20);
        spit(bad, header_only);
        CHECK(kind_of(bad) == CheckpointError::Kind::Truncated);

        auto trailing = bytes;
        trailing.push_back(0);
        spit(bad, trailing);
        CHECK(kind_of(bad) == CheckpointError::Kind::ExtentMismatch);

        CHECK_THROWS_AS(checkpoint_read(scratch("missing.ckp")), IoError);
        CHECK_THROWS_AS(checkpoint_write(f, RelaxationModel(1e-3), scratch("no_dir") / "x" / "y.ckp"), IoError);
    }

    TEST_CASE("stop, save, load and continue matches an uninterrupted run")
    {
        const auto set = build_d2q9(0.5);
        DistributionField f(UniformPeriodicGrid(2, 10), set);
        std::mt19937_64 rng(77);
        oracle::randomize(f, rng, 0.2);
        const RelaxationModel model(1e-3);
        const SchemeConfig cfg(model, 0.5, Reconstruction::Dugks, f.grid(), set);

        DistributionField straight = f;
        Stepper a(cfg);
        for (int k = 0; k < 30; ++k) {
            a.advance(straight);
        }

        Stepper b(cfg);
        for (int k = 0; k < 13; ++k) {
            b.advance(f);
        }
        const auto path = scratch("resume.ckp");
        checkpoint_write(f, model, path);
        auto loaded = checkpoint_read(path);
        Stepper c(SchemeConfig(loaded.model, 0.5, Reconstruction::Dugks, loaded.field.grid(), loaded.field.set()));
        for (int k = 13; k < 30; ++k) {
            c.advance(loaded.field);
        }
        CHECK(loaded.field.step_count() == 30);
        CHECK(loaded.field.time() == straight.time());
        CHECK(std::equal(straight.values().begin(), straight.values().end(), loaded.field.values().begin()));
    }
}
