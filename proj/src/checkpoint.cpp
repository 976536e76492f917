#include "twincl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "twincl/io.hpp"

namespace twincl {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_matrix(std::ostream& out, const Matrix& m) {
  auto flat = m.flat();
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("checkpoint truncated");
  return v;
}

void get_matrix(std::istream& in, Matrix& m) {
  auto flat = m.flat();
  if (!in.read(reinterpret_cast<char*>(flat.data()),
               static_cast<std::streamsize>(flat.size() * sizeof(double))))
    throw Error("checkpoint truncated");
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& s = ckpt.twins;
  if (s.theta.values.rows() != s.phi.values.rows() || s.theta.dim() != s.phi.dim())
    throw Error("checkpoint: theta and phi shapes differ");
  out << kCheckpointMagic << '\n';
  put_u64(out, s.theta.num_users);
  put_u64(out, s.theta.num_items);
  put_u64(out, s.theta.dim());
  put_u64(out, s.iteration);
  put_f64(out, s.beta);
  put_matrix(out, s.theta.values);
  put_matrix(out, s.phi.values);
  out.put(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const auto& a = *ckpt.optimizer;
    put_u64(out, a.step);
    put_f64(out, a.lr);
    put_f64(out, a.beta1);
    put_f64(out, a.beta2);
    put_f64(out, a.epsilon);
    put_matrix(out, a.m);
    put_matrix(out, a.v);
  }
  if (!out) throw Error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != kCheckpointMagic)
    throw Error("not a checkpoint (expected header " + std::string(kCheckpointMagic) + ")");
  Checkpoint ckpt;
  auto& s = ckpt.twins;
  const auto users = get<std::uint64_t>(in);
  const auto items = get<std::uint64_t>(in);
  const auto dim = get<std::uint64_t>(in);
  if (dim == 0 || users + items == 0 || (users + items) > (std::uint64_t{1} << 40) / dim)
    throw Error("checkpoint: implausible table shape");
  s.iteration = get<std::uint64_t>(in);
  s.beta = get<double>(in);
  s.theta = {users, items, Matrix(users + items, dim)};
  s.phi = {users, items, Matrix(users + items, dim)};
  get_matrix(in, s.theta.values);
  get_matrix(in, s.phi.values);
  const char has_opt = get<char>(in);
  if (has_opt) {
    AdamState a;
    a.step = get<std::uint64_t>(in);
    a.lr = get<double>(in);
    a.beta1 = get<double>(in);
    a.beta2 = get<double>(in);
    a.epsilon = get<double>(in);
    a.m = Matrix(users + items, dim);
    a.v = Matrix(users + items, dim);
    get_matrix(in, a.m);
    get_matrix(in, a.v);
    ckpt.optimizer = std::move(a);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  AtomicFile file(path, true);
  write_checkpoint(file.stream(), ckpt);
  file.commit();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace twincl
