#pragma once

// JSON serialization of traces and reports. Keys keep insertion order so that
// identical runs produce byte-identical files.

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "continuation.hpp"
#include "pde.hpp"
#include "properties.hpp"
#include "verify.hpp"

namespace lpdcm {

using Json = nlohmann::ordered_json;

inline Json to_json(const ContinuationTrace& tr)
{
    const char* key = tr.param == ContinuationTrace::Param::t ? "t" : "eps";
    Json arr = Json::array();
    for (const TraceStep& s : tr.steps)
        arr.push_back({{key, s.param},
                       {"newton_iters", s.newton_iters},
                       {"residual_inf", s.residual_inf},
                       {"min_eig_W", s.min_eig_W},
                       {"min_u", s.min_u},
                       {"max_u", s.max_u}});
    return arr;
}

inline Json to_json(const BoundsReport& r)
{
    return {{"exponent", r.exponent},
            {"exponent_kind", r.uses_epsilon ? "eps" : "p-q"},
            {"c0_lower", r.c0_lower},
            {"c0_upper", r.c0_upper},
            {"observed_min", r.observed_min},
            {"observed_max", r.observed_max},
            {"max_u", r.max_u},
            {"max_grad", r.max_grad},
            {"c1_ratio", r.c1_ratio},
            {"min_eig_W", r.min_eig_W},
            {"slack", {{"c0", r.slack.c0}, {"c1", r.slack.c1}}},
            {"pass", {{"c0", r.c0_pass}, {"c1", r.c1_pass}, {"convexity", r.convex_pass}, {"all", r.pass()}}}};
}

inline Json to_json(const AssumptionReport& r)
{
    return {{"case", to_string(r.case_tag)}, {"coefficient", r.coefficient}, {"min_eig", r.min_eig},
            {"argmin_node", r.argmin_node},  {"tol_assume", r.tol_assume},   {"satisfied", r.satisfied}};
}

inline Json to_json(const EigenResult& r)
{
    Json seq = Json::array();
    for (const EigenStep& s : r.sequence)
        seq.push_back({{"eps", s.eps},
                       {"gamma_eps", s.gamma_eps},
                       {"min_u", s.min_u},
                       {"max_u", s.max_u},
                       {"grad_ratio", s.grad_ratio},
                       {"oscillation", s.oscillation},
                       {"newton_iters", s.newton_iters},
                       {"residual_inf", s.residual_inf},
                       {"min_eig_W", s.min_eig_W}});
    return {{"gamma", r.gamma},
            {"bracket", {r.bracket_lo, r.bracket_hi}},
            {"fit_points", r.fit_points},
            {"extrapolation", r.extrapolation},
            {"normalized_min", r.u_normalized.min()},
            {"normalized_max", r.u_normalized.max()},
            {"sequence", seq}};
}

inline Json to_json(const ConvergenceTable& t)
{
    Json rows = Json::array();
    for (const ConvergenceRow& r : t.rows)
        rows.push_back({{"n_lat", r.n_lat}, {"h", r.h}, {"error", r.error},
                        {"order", r.order ? Json(*r.order) : Json(nullptr)}});
    return {{"kind", t.manufactured ? "exact" : "self"}, {"rows", rows}};
}

inline Json to_json(const PropertyResult& r)
{
    return {{"name", r.name},
            {"samples", r.samples},
            {"failures", r.failures},
            {"worst_ratio", r.worst},
            {"counterexample", r.counterexample}};
}

inline void write_json(const Json& j, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("write failed: " + path);
}

} // namespace lpdcm
