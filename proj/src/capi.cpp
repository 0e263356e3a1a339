#include "bvtomo/bvtomo.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "bvtomo/error.hpp"
#include "bvtomo/experiment.hpp"
#include "bvtomo/io.hpp"

using namespace bvtomo;

struct bvt_config {
  ExperimentSpec spec;
};
struct bvt_mesh {
  TriMesh mesh;
};
struct bvt_data {
  BoundaryDataSet data;
};
struct bvt_forward {
  ExperimentSpec spec;
  TriMesh mesh;
  ForwardOutput out;
};
struct bvt_run {
  ExperimentSpec spec;
  TriMesh mesh;
  InversionOutput out;
};

namespace {

thread_local std::string last_error;

template <class F>
int guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return BVT_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return BVT_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return BVT_E_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return BVT_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

void copy_out(const std::string& s, char* buf, std::size_t cap, std::size_t* len) {
  need(len, "len");
  *len = s.size();
  if (!buf || cap <= s.size())
    fail(ErrorCode::InvalidArgument, "buffer too small: need " + std::to_string(s.size() + 1) + " bytes");
  std::memcpy(buf, s.data(), s.size());
  buf[s.size()] = '\0';
}

}  // namespace

extern "C" {

const char* bvt_version(void) { return library_version().data(); }

const char* bvt_last_error(void) { return last_error.c_str(); }

const char* bvt_status_name(int status) {
  switch (status) {
    case BVT_OK: return "ok";
    case BVT_E_INVALID_ARGUMENT: return "invalid argument";
    case BVT_E_PARSE: return "parse error";
    case BVT_E_IO: return "i/o error";
    case BVT_E_SOLVER: return "solver failure";
    case BVT_E_INCOMPATIBLE: return "incompatible inputs";
    case BVT_E_INTERNAL: return "internal error";
    default: return "unknown status";
  }
}

int bvt_config_new(bvt_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new bvt_config{};
  });
}

int bvt_config_clone(const bvt_config* cfg, bvt_config** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = new bvt_config(*cfg);
  });
}

void bvt_config_free(bvt_config* cfg) { delete cfg; }

int bvt_config_set(bvt_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    apply_setting(cfg->spec, key, value);
  });
}

int bvt_config_load(bvt_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "config");
    need(path, "path");
    // Apply to a copy so a bad line leaves the config untouched.
    ExperimentSpec s = cfg->spec;
    apply_settings(s, parse_key_values(read_text_file(path), path));
    cfg->spec = std::move(s);
  });
}

int bvt_config_get(const bvt_config* cfg, const char* key, char* buf, size_t cap, size_t* len) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    copy_out(get_setting(cfg->spec, key), buf, cap, len);
  });
}

int bvt_config_dump(const bvt_config* cfg, char* buf, size_t cap, size_t* len) {
  return guarded([&] {
    need(cfg, "config");
    copy_out(spec_to_text(cfg->spec), buf, cap, len);
  });
}

int bvt_config_validate(const bvt_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    cfg->spec.validate();
  });
}

int bvt_mesh_build(const bvt_config* cfg, bvt_mesh** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = new bvt_mesh{build_mesh(cfg->spec)};
  });
}

void bvt_mesh_free(bvt_mesh* mesh) { delete mesh; }

int bvt_mesh_counts(const bvt_mesh* mesh, size_t* nodes, size_t* elements, size_t* boundary_nodes) {
  return guarded([&] {
    need(mesh, "mesh");
    if (nodes) *nodes = mesh->mesh.node_count();
    if (elements) *elements = mesh->mesh.triangle_count();
    if (boundary_nodes) *boundary_nodes = mesh->mesh.boundary_nodes().size();
  });
}

int bvt_mesh_h(const bvt_mesh* mesh, double* h) {
  return guarded([&] {
    need(mesh, "mesh");
    need(h, "h");
    *h = mesh->mesh.h();
  });
}

int bvt_mesh_hash(const bvt_mesh* mesh, char* buf, size_t cap, size_t* len) {
  return guarded([&] {
    need(mesh, "mesh");
    copy_out(mesh->mesh.content_hash(), buf, cap, len);
  });
}

int bvt_mesh_write_csv(const bvt_mesh* mesh, const char* dir) {
  return guarded([&] {
    need(mesh, "mesh");
    need(dir, "dir");
    ensure_directory(dir);
    const std::filesystem::path d(dir);
    write_text_file((d / "nodes.csv").string(), nodes_csv(mesh->mesh));
    write_text_file((d / "elements.csv").string(), elements_csv(mesh->mesh));
  });
}

int bvt_data_build(const bvt_config* cfg, const bvt_mesh* mesh, bvt_data** out) {
  return guarded([&] {
    need(cfg, "config");
    need(mesh, "mesh");
    need(out, "out");
    *out = new bvt_data{build_data(cfg->spec, mesh->mesh)};
  });
}

void bvt_data_free(bvt_data* data) { delete data; }

int bvt_data_pair_count(const bvt_data* data, size_t* count) {
  return guarded([&] {
    need(data, "data");
    need(count, "count");
    *count = data->data.size();
  });
}

int bvt_data_write_csv(const bvt_data* data, const char* path) {
  return guarded([&] {
    need(data, "data");
    need(path, "path");
    write_text_file(path, boundary_data_csv(data->data));
  });
}

int bvt_manifest_write(const bvt_config* cfg, const bvt_mesh* mesh, const char* dir) {
  return guarded([&] {
    need(cfg, "config");
    need(mesh, "mesh");
    need(dir, "dir");
    ensure_directory(dir);
    write_text_file((std::filesystem::path(dir) / "manifest.txt").string(), manifest_text(cfg->spec, mesh->mesh));
  });
}

int bvt_forward_run(const bvt_config* cfg, const bvt_mesh* mesh, const bvt_data* data, bvt_forward** out) {
  return guarded([&] {
    need(cfg, "config");
    need(mesh, "mesh");
    need(data, "data");
    need(out, "out");
    auto fw = std::make_unique<bvt_forward>();
    fw->spec = cfg->spec;
    fw->mesh = mesh->mesh;
    fw->out = run_forward(fw->spec, fw->mesh, data->data);
    *out = fw.release();
  });
}

void bvt_forward_free(bvt_forward* fw) { delete fw; }

int bvt_forward_errors(const bvt_forward* fw, double* l2, double* h1, double* neumann_l2) {
  return guarded([&] {
    need(fw, "forward");
    if (l2) *l2 = fw->out.l2_error;
    if (h1) *h1 = fw->out.h1_error;
    if (neumann_l2) *neumann_l2 = fw->out.neumann_l2_error;
  });
}

int bvt_forward_write(const bvt_forward* fw, const char* dir) {
  return guarded([&] {
    need(fw, "forward");
    need(dir, "dir");
    write_forward(dir, fw->spec, fw->mesh, fw->out);
  });
}

int bvt_invert_run(const bvt_config* cfg, const bvt_mesh* mesh, const bvt_data* data, bvt_run** out) {
  return guarded([&] {
    need(cfg, "config");
    need(mesh, "mesh");
    need(data, "data");
    need(out, "out");
    auto run = std::make_unique<bvt_run>();
    run->spec = cfg->spec;
    run->mesh = mesh->mesh;
    run->out = run_inversion(run->spec, run->mesh, data->data);
    *out = run.release();
  });
}

void bvt_run_free(bvt_run* run) { delete run; }

int bvt_run_iterations(const bvt_run* run, size_t* count) {
  return guarded([&] {
    need(run, "run");
    need(count, "count");
    *count = run->out.result.history.size();
  });
}

namespace {

const IterationRecord& record(const bvt_run* run, size_t iteration) {
  need(run, "run");
  const auto& h = run->out.result.history;
  if (iteration < 1 || iteration > h.size())
    fail(ErrorCode::InvalidArgument, "iteration " + std::to_string(iteration) + " outside 1.." + std::to_string(h.size()));
  return h[iteration - 1];
}

}  // namespace

int bvt_run_uniform_values(const bvt_run* run, size_t iteration, double* alpha_in, double* alpha_out) {
  return guarded([&] {
    const auto& r = record(run, iteration);
    if (alpha_in) *alpha_in = r.alpha_in;
    if (alpha_out) *alpha_out = r.alpha_out;
  });
}

int bvt_run_objective(const bvt_run* run, size_t iteration, double* value) {
  return guarded([&] {
    need(value, "value");
    *value = record(run, iteration).terms.total();
  });
}

int bvt_run_write(const bvt_run* run, const char* dir) {
  return guarded([&] {
    need(run, "run");
    need(dir, "dir");
    write_inversion(dir, run->spec, run->mesh, run->out);
  });
}

int bvt_report(const char* dir, char* buf, size_t cap, size_t* len) {
  return guarded([&] {
    need(dir, "dir");
    copy_out(build_report(dir).markdown, buf, cap, len);
  });
}

}  // extern "C"
