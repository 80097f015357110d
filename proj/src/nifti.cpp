#include "tractosurv/nifti.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "tractosurv/text_io.hpp"

namespace tractosurv {

namespace {

#pragma pack(push, 1)
struct Nifti1Header {
    int32_t sizeof_hdr;    // must be 348
    char data_type[10];
    char db_name[18];
    int32_t extents;
    int16_t session_error;
    char regular;
    char dim_info;
    int16_t dim[8];
    float intent_p1;
    float intent_p2;
    float intent_p3;
    int16_t intent_code;
    int16_t datatype;
    int16_t bitpix;
    int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max;
    float cal_min;
    float slice_duration;
    float toffset;
    int32_t glmax;
    int32_t glmin;
    char descrip[80];
    char aux_file[24];
    int16_t qform_code;
    int16_t sform_code;
    float quatern_b;
    float quatern_c;
    float quatern_d;
    float qoffset_x;
    float qoffset_y;
    float qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];         // "n+1\0" for single-file
};
#pragma pack(pop)

static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

template <typename T>
void swap_bytes(T& v) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
}

void swap_header(Nifti1Header& h) {
    swap_bytes(h.sizeof_hdr);
    swap_bytes(h.extents);
    swap_bytes(h.session_error);
    for (auto& d : h.dim) swap_bytes(d);
    swap_bytes(h.intent_p1);
    swap_bytes(h.intent_p2);
    swap_bytes(h.intent_p3);
    swap_bytes(h.intent_code);
    swap_bytes(h.datatype);
    swap_bytes(h.bitpix);
    swap_bytes(h.slice_start);
    for (auto& d : h.pixdim) swap_bytes(d);
    swap_bytes(h.vox_offset);
    swap_bytes(h.scl_slope);
    swap_bytes(h.scl_inter);
    swap_bytes(h.slice_end);
    swap_bytes(h.cal_max);
    swap_bytes(h.cal_min);
    swap_bytes(h.slice_duration);
    swap_bytes(h.toffset);
    swap_bytes(h.glmax);
    swap_bytes(h.glmin);
    swap_bytes(h.qform_code);
    swap_bytes(h.sform_code);
    swap_bytes(h.quatern_b);
    swap_bytes(h.quatern_c);
    swap_bytes(h.quatern_d);
    swap_bytes(h.qoffset_x);
    swap_bytes(h.qoffset_y);
    swap_bytes(h.qoffset_z);
    for (auto& v : h.srow_x) swap_bytes(v);
    for (auto& v : h.srow_y) swap_bytes(v);
    for (auto& v : h.srow_z) swap_bytes(v);
}

int bytes_per_voxel(int16_t datatype) {
    switch (datatype) {
    case kNiftiUint8: return 1;
    case kNiftiInt16: return 2;
    case kNiftiInt32: return 4;
    case kNiftiFloat32: return 4;
    case kNiftiFloat64: return 8;
    default: return 0;
    }
}

Affine affine_from_qform(const Nifti1Header& h) {
    // Standard quaternion reconstruction; qfac (pixdim[0]) flips the z column.
    double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    double a = 1.0 - (b * b + c * c + d * d);
    a = a < 1e-7 ? 0.0 : std::sqrt(a);
    const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
    const double sx = h.pixdim[1], sy = h.pixdim[2], sz = h.pixdim[3] * qfac;
    std::array<double, 16> m{};
    m[0] = (a * a + b * b - c * c - d * d) * sx;
    m[1] = 2 * (b * c - a * d) * sy;
    m[2] = 2 * (b * d + a * c) * sz;
    m[3] = h.qoffset_x;
    m[4] = 2 * (b * c + a * d) * sx;
    m[5] = (a * a + c * c - b * b - d * d) * sy;
    m[6] = 2 * (c * d - a * b) * sz;
    m[7] = h.qoffset_y;
    m[8] = 2 * (b * d - a * c) * sx;
    m[9] = 2 * (c * d + a * b) * sy;
    m[10] = (a * a + d * d - b * b - c * c) * sz;
    m[11] = h.qoffset_z;
    m[15] = 1.0;
    return Affine(m);
}

} // namespace

NiftiData read_nifti(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open NIfTI file: " + path);
    Nifti1Header h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in || in.gcount() != sizeof(h)) throw_data("truncated NIfTI header: " + path);

    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        swap_header(h);
        swapped = true;
        if (h.sizeof_hdr != 348) throw_data("not a NIfTI-1 file (bad sizeof_hdr): " + path);
    }
    if (std::memcmp(h.magic, "n+1", 4) != 0)
        throw_data("not a single-file NIfTI-1 image (bad magic): " + path);

    NiftiData out;
    out.ndim = h.dim[0];
    if (out.ndim < 1 || out.ndim > 7) throw_data("invalid dimension count in " + path);
    size_t n = 1;
    for (int i = 0; i < out.ndim; ++i) {
        if (h.dim[i + 1] <= 0) throw_data("non-positive dimension in " + path);
        out.dims[static_cast<size_t>(i)] = h.dim[i + 1];
        n *= static_cast<size_t>(h.dim[i + 1]);
        out.pixdim[static_cast<size_t>(i)] = h.pixdim[i + 1];
    }
    out.datatype = h.datatype;
    const int bpv = bytes_per_voxel(h.datatype);
    if (bpv == 0)
        throw_data("unsupported NIfTI datatype " + std::to_string(h.datatype) + " in " + path);
    out.scl_slope = h.scl_slope;
    out.scl_inter = h.scl_inter;

    if (h.sform_code > 0) {
        std::array<double, 16> m{};
        for (int i = 0; i < 4; ++i) {
            m[static_cast<size_t>(i)] = h.srow_x[i];
            m[static_cast<size_t>(4 + i)] = h.srow_y[i];
            m[static_cast<size_t>(8 + i)] = h.srow_z[i];
        }
        m[15] = 1.0;
        out.affine = Affine(m);
    } else if (h.qform_code > 0) {
        out.affine = affine_from_qform(h);
    } else {
        out.affine = Affine::scaling(out.pixdim[0], out.pixdim[1], out.pixdim[2]);
    }

    const auto offset = static_cast<std::streamoff>(h.vox_offset);
    if (offset < 348) throw_data("invalid vox_offset in " + path);
    in.seekg(offset, std::ios::beg);
    std::vector<char> raw(n * static_cast<size_t>(bpv));
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!in || in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw_data("truncated NIfTI data in " + path);

    out.data.resize(n);
    const char* p = raw.data();
    for (size_t i = 0; i < n; ++i, p += bpv) {
        switch (h.datatype) {
        case kNiftiUint8: {
            uint8_t v;
            std::memcpy(&v, p, 1);
            out.data[i] = v;
            break;
        }
        case kNiftiInt16: {
            int16_t v;
            std::memcpy(&v, p, 2);
            if (swapped) swap_bytes(v);
            out.data[i] = v;
            break;
        }
        case kNiftiInt32: {
            int32_t v;
            std::memcpy(&v, p, 4);
            if (swapped) swap_bytes(v);
            out.data[i] = v;
            break;
        }
        case kNiftiFloat32: {
            float v;
            std::memcpy(&v, p, 4);
            if (swapped) swap_bytes(v);
            out.data[i] = v;
            break;
        }
        case kNiftiFloat64: {
            double v;
            std::memcpy(&v, p, 8);
            if (swapped) swap_bytes(v);
            out.data[i] = v;
            break;
        }
        }
    }
    return out;
}

void write_nifti(const std::string& path, int ndim, const std::array<int, 7>& dims,
                 const std::array<double, 7>& pixdim, const Affine& affine, int16_t datatype,
                 const std::vector<double>& data) {
    const int bpv = bytes_per_voxel(datatype);
    if (bpv == 0) throw_data("unsupported NIfTI datatype for writing");
    if (ndim < 1 || ndim > 7) throw_data("invalid dimension count for writing");

    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = static_cast<int16_t>(ndim);
    size_t n = 1;
    for (int i = 0; i < 7; ++i) {
        h.dim[i + 1] = 1;
        h.pixdim[i + 1] = 1.0f;
    }
    for (int i = 0; i < ndim; ++i) {
        h.dim[i + 1] = static_cast<int16_t>(dims[static_cast<size_t>(i)]);
        h.pixdim[i + 1] = static_cast<float>(pixdim[static_cast<size_t>(i)]);
        n *= static_cast<size_t>(dims[static_cast<size_t>(i)]);
    }
    if (data.size() != n) throw_data("NIfTI data length does not match dims");
    h.datatype = datatype;
    h.bitpix = static_cast<int16_t>(bpv * 8);
    h.pixdim[0] = 1.0f;
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2; // mm
    h.qform_code = 0;
    h.sform_code = 1;
    for (int i = 0; i < 4; ++i) {
        h.srow_x[i] = static_cast<float>(affine.at(0, i));
        h.srow_y[i] = static_cast<float>(affine.at(1, i));
        h.srow_z[i] = static_cast<float>(affine.at(2, i));
    }
    std::memcpy(h.magic, "n+1", 4);

    std::string blob(sizeof(h) + 4 + n * static_cast<size_t>(bpv), '\0');
    std::memcpy(blob.data(), &h, sizeof(h));
    // 4 zero bytes: "no extensions" flag, data starts at vox_offset 352
    char* p = blob.data() + sizeof(h) + 4;
    for (size_t i = 0; i < n; ++i, p += bpv) {
        switch (datatype) {
        case kNiftiUint8: {
            const auto v = static_cast<uint8_t>(data[i]);
            std::memcpy(p, &v, 1);
            break;
        }
        case kNiftiInt16: {
            const auto v = static_cast<int16_t>(data[i]);
            std::memcpy(p, &v, 2);
            break;
        }
        case kNiftiInt32: {
            const auto v = static_cast<int32_t>(data[i]);
            std::memcpy(p, &v, 4);
            break;
        }
        case kNiftiFloat32: {
            const auto v = static_cast<float>(data[i]);
            std::memcpy(p, &v, 4);
            break;
        }
        case kNiftiFloat64: {
            std::memcpy(p, &data[i], 8);
            break;
        }
        }
    }
    write_binary_atomic(path, blob.data(), blob.size());
}

Volume load_nifti(const std::string& path, VolumeKind kind) {
    NiftiData raw = read_nifti(path);
    if (raw.ndim != 3)
        throw_data("expected a 3-D image, got " + std::to_string(raw.ndim) + "-D: " + path);
    const bool has_scaling =
        raw.scl_slope != 0.0 && !(raw.scl_slope == 1.0 && raw.scl_inter == 0.0);
    if (has_scaling) {
        if (kind != VolumeKind::scalar)
            throw_data("scl_slope/scl_inter scaling is not valid for label/mask volumes: " + path);
        for (auto& v : raw.data) v = v * raw.scl_slope + raw.scl_inter;
    }
    return Volume({raw.dims[0], raw.dims[1], raw.dims[2]},
                  {raw.pixdim[0], raw.pixdim[1], raw.pixdim[2]}, raw.affine, kind,
                  std::move(raw.data));
}

void save_nifti(const Volume& v, const std::string& path) {
    int16_t datatype = kNiftiFloat32;
    if (v.kind() == VolumeKind::mask) datatype = kNiftiUint8;
    else if (v.kind() == VolumeKind::label) datatype = kNiftiInt32;
    std::array<int, 7> dims{1, 1, 1, 1, 1, 1, 1};
    std::array<double, 7> pixdim{1, 1, 1, 1, 1, 1, 1};
    for (int i = 0; i < 3; ++i) {
        dims[static_cast<size_t>(i)] = v.dims()[static_cast<size_t>(i)];
        pixdim[static_cast<size_t>(i)] = v.spacing()[static_cast<size_t>(i)];
    }
    write_nifti(path, 3, dims, pixdim, v.affine(), datatype, v.data());
}

} // namespace tractosurv
