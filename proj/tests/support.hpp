#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "emd/scorer.hpp"

namespace testing {

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        m_path = std::filesystem::temp_directory_path() /
                 ("emd-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() { std::filesystem::remove_all(m_path); }
    TempDir(TempDir const&) = delete;
    TempDir& operator=(TempDir const&) = delete;

    [[nodiscard]] std::filesystem::path const& path() const { return m_path; }
    [[nodiscard]] std::filesystem::path operator/(std::string const& name) const { return m_path / name; }

  private:
    std::filesystem::path m_path;
};

inline void write_file(std::filesystem::path const& path, std::string const& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Knows the grade of every text: mono probability = grade / max_grade, duo
/// probability 1 / 0 / 0.5 by grade comparison.
class OracleScorer final : public emd::Scorer {
  public:
    OracleScorer(std::unordered_map<std::string, int> grades, int max_grade)
        : m_grades(std::move(grades)), m_max(max_grade)
    {}

    std::vector<double> score_mono(std::string const&, std::span<std::string const> texts) override
    {
        std::vector<double> out;
        for (auto const& t : texts) {
            out.push_back(static_cast<double>(grade(t)) / m_max);
        }
        return out;
    }

    std::vector<double> score_duo(std::string const&, std::span<emd::TextPair const> pairs) override
    {
        std::vector<double> out;
        for (auto const& [a, b] : pairs) {
            int ga = grade(a);
            int gb = grade(b);
            out.push_back(ga > gb ? 1.0 : ga < gb ? 0.0 : 0.5);
        }
        return out;
    }

  private:
    int grade(std::string const& text) const
    {
        auto it = m_grades.find(text);
        return it == m_grades.end() ? 0 : it->second;
    }

    std::unordered_map<std::string, int> m_grades;
    int m_max;
};

/// Always returns the same probability.
class ConstantScorer final : public emd::Scorer {
  public:
    explicit ConstantScorer(double p) : m_p(p) {}
    std::vector<double> score_mono(std::string const&, std::span<std::string const> texts) override
    {
        return std::vector<double>(texts.size(), m_p);
    }
    std::vector<double> score_duo(std::string const&, std::span<emd::TextPair const> pairs) override
    {
        return std::vector<double>(pairs.size(), m_p);
    }

  private:
    double m_p;
};

/// Fails the first `failures` calls with a transport error.
class FlakyScorer final : public emd::Scorer {
  public:
    FlakyScorer(emd::Scorer& inner, int failures) : m_inner(inner), m_remaining(failures) {}
    std::vector<double> score_mono(std::string const& q, std::span<std::string const> texts) override
    {
        maybe_fail();
        return m_inner.score_mono(q, texts);
    }
    std::vector<double> score_duo(std::string const& q, std::span<emd::TextPair const> pairs) override
    {
        maybe_fail();
        return m_inner.score_duo(q, pairs);
    }

  private:
    void maybe_fail()
    {
        if (m_remaining.fetch_sub(1) > 0) {
            throw emd::transport_error("simulated outage");
        }
    }
    emd::Scorer& m_inner;
    std::atomic<int> m_remaining;
};

}  // namespace testing
