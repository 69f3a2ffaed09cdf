/* Standalone generator for tests/fixtures/rle_strings.json.
 *
 * Implements the printable-character encoding of COCO compressed RLE
 * independently of the Python package: 5 value bits per character, bit
 * 0x20 marks continuation, characters are offset by 48, and from the
 * third count onward the value stored is the delta against the count
 * two positions back.  Negative deltas rely on sign extension, which
 * the decoder reconstructs from bit 0x10 of the final group.
 *
 * Masks are generated with an embedded splitmix64 so the fixture is
 * reproducible:
 *
 *   gcc -O2 -o rle_string_ref rle_string_ref.c
 *   ./rle_string_ref > ../tests/fixtures/rle_strings.json
 */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <stdint.h>

static uint64_t rng_state = 0x9e3779b97f4a7c15ULL;

static uint64_t next_u64(void) {
    uint64_t z = (rng_state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/* counts -> printable string; caller frees */
static char *counts_to_chars(const long *cnts, size_t m) {
    char *s = malloc(m * 16 + 1);
    size_t p = 0, i;
    for (i = 0; i < m; i++) {
        long x = cnts[i];
        int more = 1;
        if (i > 2) x -= cnts[i - 2];
        while (more) {
            char c = x & 0x1f;
            x >>= 5;
            more = (c & 0x10) ? x != -1 : x != 0;
            if (more) c |= 0x20;
            c += 48;
            s[p++] = c;
        }
    }
    s[p] = 0;
    return s;
}

/* printable string -> counts; returns length via *m_out, caller frees */
static long *chars_to_counts(const char *s, size_t *m_out) {
    size_t cap = strlen(s) + 1, m = 0, p = 0, k;
    long *cnts = malloc(cap * sizeof(long));
    while (s[p]) {
        long x = 0;
        int more = 1;
        k = 0;
        while (more) {
            char c = s[p] - 48;
            x |= (long)(c & 0x1f) << (5 * k);
            more = c & 0x20;
            p++;
            k++;
            if (!more && (c & 0x10)) x |= -1L << (5 * k);
        }
        if (m > 2) x += cnts[m - 2];
        cnts[m++] = x;
    }
    *m_out = m;
    return cnts;
}

/* column-major background-first run lengths of an h*w 0/1 mask */
static long *mask_to_counts(const unsigned char *mask, int h, int w, size_t *m_out) {
    long *cnts = malloc(((size_t)h * w + 2) * sizeof(long));
    size_t m = 0;
    long run = 0;
    unsigned char cur = 0;
    int r, c;
    for (c = 0; c < w; c++) {
        for (r = 0; r < h; r++) {
            unsigned char v = mask[(size_t)r * w + c] ? 1 : 0;
            if (v == cur) {
                run++;
            } else {
                cnts[m++] = run;
                cur = v;
                run = 1;
            }
        }
    }
    cnts[m++] = run;
    *m_out = m;
    return cnts;
}

static void print_escaped(const char *s) {
    for (; *s; s++) {
        if (*s == '\\') {
            putchar('\\');
            putchar('\\');
        } else {
            putchar(*s);
        }
    }
}

int main(void) {
    const int n_cases = 250;
    int i;
    printf("[\n");
    for (i = 0; i < n_cases; i++) {
        int h = 1 + (int)(next_u64() % 64);
        int w = 1 + (int)(next_u64() % 64);
        /* vary density so runs range from single pixels to whole columns */
        uint64_t threshold = next_u64();
        unsigned char *mask = malloc((size_t)h * w);
        int j;
        for (j = 0; j < h * w; j++) mask[j] = next_u64() < threshold;

        size_t m, m2, k;
        long *cnts = mask_to_counts(mask, h, w, &m);
        char *s = counts_to_chars(cnts, m);
        long *back = chars_to_counts(s, &m2);
        if (m != m2 || memcmp(cnts, back, m * sizeof(long)) != 0) {
            fprintf(stderr, "round trip failed on case %d\n", i);
            return 1;
        }

        printf("  {\"height\": %d, \"width\": %d, \"counts\": [", h, w);
        for (k = 0; k < m; k++) printf(k ? ", %ld" : "%ld", cnts[k]);
        printf("], \"rle_string\": \"");
        print_escaped(s);
        printf("\"}%s\n", i + 1 < n_cases ? "," : "");

        free(mask);
        free(cnts);
        free(s);
        free(back);
    }
    printf("]\n");
    return 0;
}
