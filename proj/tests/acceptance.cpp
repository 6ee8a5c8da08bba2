// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion. Limits live in
// patchfdtd::validation::limits; the standard preset is used unless
// PATCHFDTD_ACCEPTANCE_PRESET names another one.

#include "patchfdtd/validation.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace patchfdtd;

namespace
{

std::string slurp(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

}  // namespace

int main()
{
  const fs::path work = PATCHFDTD_TEST_WORK;
  fs::create_directories(work);

  validation::ValidateOptions opts;
  if (const char *p = std::getenv("PATCHFDTD_ACCEPTANCE_PRESET"))
    opts.preset = p;
  opts.threads = std::max(1u, std::thread::hardware_concurrency());
  opts.work_dir = work;
  opts.cache_dir = work / "cache";
  opts.report = true;
  opts.log = &std::cerr;

  validation::ValidationResult r;
  try
  {
    r = validation::run_validation(opts);
  }
  catch (const std::exception &e)
  {
    std::cout << "acceptance aborted: " << e.what() << "\n";
    return 1;
  }

  // the Touchstone writer must reproduce the checked-in golden file byte for byte
  const std::string golden = slurp(fs::path(PATCHFDTD_TEST_DATA) / "golden_synthetic.s1p");
  const bool same = !golden.empty() && golden == validation::synthetic_touchstone();
  r.checks.push_back({"9", "touchstone golden file", true, same, same ? "identical" : "differs", "byte-identical"});

  std::cout << validation::format_table(r.checks) << "\n";
  if (!r.report.empty())
  {
    std::ofstream(work / "report.md") << r.report;
    std::cout << r.report << "\n";
  }

  std::map<std::string, std::vector<const validation::CheckLine *>> by_id;
  for (const auto &c : r.checks)
    by_id[c.id].push_back(&c);

  bool all = true;
  for (int n = 1; n <= 9; ++n)
  {
    const std::string id = std::to_string(n);
    const auto it = by_id.find(id);
    bool pass = it != by_id.end();
    bool informational = pass;
    std::string detail;
    if (it != by_id.end())
      for (const auto *c : it->second)
      {
        if (c->hard)
        {
          informational = false;
          pass = pass && c->passed;
        }
        detail += (detail.empty() ? "" : "; ") + c->name + ": " + c->measured + " (" + c->limit + ")";
      }
    else
      detail = "not run";
    all = all && pass;
    std::cout << "criterion " << n << ": " << (pass ? "PASS" : "FAIL") << (informational ? " (informational)" : "")
              << "  " << detail << "\n";
  }
  std::cout << (all ? "acceptance: PASS" : "acceptance: FAIL") << "\n";
  return all ? 0 : 1;
}
